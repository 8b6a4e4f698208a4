#pragma once

#include <random>

#include "mpg/exact_eval.hpp"
#include "mpg/presets.hpp"
#include "mpg/tabular.hpp"

namespace mpg::test {

inline TransitionKernel random_kernel(std::mt19937_64& rng, int S, int A, int H) {
    std::uniform_real_distribution<double> unif(0.05, 1.0);
    TransitionKernel kern;
    kern.p.assign(H - 1, std::vector<std::vector<std::vector<double>>>(
                             S, std::vector<std::vector<double>>(A, std::vector<double>(S, 0.0))));
    for (int h = 0; h < H - 1; ++h)
        for (int s = 0; s < S; ++s)
            for (int a = 0; a < A; ++a) {
                double sum = 0.0;
                for (int sn = 0; sn < S; ++sn) {
                    kern.p[h][s][a][sn] = unif(rng);
                    sum += kern.p[h][s][a][sn];
                }
                for (int sn = 0; sn < S; ++sn) kern.p[h][s][a][sn] /= sum;
            }
    return kern;
}

inline std::vector<double> random_dist(std::mt19937_64& rng, int S) {
    std::uniform_real_distribution<double> unif(0.05, 1.0);
    std::vector<double> d(S);
    double sum = 0.0;
    for (double& v : d) {
        v = unif(rng);
        sum += v;
    }
    for (double& v : d) v /= sum;
    return d;
}

/// Random dense game with rewards in [0,1]; welfare is the mean reward.
inline GameDefinition random_game(uint64_t seed, int n, int S, int A, int H) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    TabularGame tab;
    tab.num_agents = n;
    tab.horizon = H;
    AgentSpace space;
    space.num_states = S;
    space.num_actions = A;
    tab.spaces.assign(n, space);
    for (int i = 0; i < n; ++i) tab.kernels.push_back(random_kernel(rng, S, A, H));
    for (int i = 0; i < n; ++i) tab.initial_dists.push_back(random_dist(rng, S));

    std::vector<int> ssz(n, S), asz(n, A);
    MixedRadix sr(ssz), ar(asz);
    const long long NS = sr.total;
    const long long NA = ar.total;
    tab.rewards.assign(n, std::vector<std::vector<std::vector<double>>>(
                              H, std::vector<std::vector<double>>(NS, std::vector<double>(NA))));
    tab.welfare.assign(H, std::vector<std::vector<double>>(NS, std::vector<double>(NA, 0.0)));
    for (int i = 0; i < n; ++i)
        for (int h = 0; h < H; ++h)
            for (long long sj = 0; sj < NS; ++sj)
                for (long long aj = 0; aj < NA; ++aj) {
                    tab.rewards[i][h][sj][aj] = unif(rng);
                    tab.welfare[h][sj][aj] += tab.rewards[i][h][sj][aj] / n;
                }
    tab.reward_min = 0.0;
    tab.reward_max = 1.0;
    return to_game(std::move(tab));
}

/// Random Markov potential game: r_i = phi + u_i(s_{-i}, a_{-i}) where u_i
/// ignores agent i's own coordinates, so unilateral reward differences equal
/// phi differences by construction. Rewards land in [0,1].
inline GameDefinition random_mpg(uint64_t seed, int n, int S, int A, int H) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 0.5);
    TabularGame tab;
    tab.num_agents = n;
    tab.horizon = H;
    AgentSpace space;
    space.num_states = S;
    space.num_actions = A;
    tab.spaces.assign(n, space);
    for (int i = 0; i < n; ++i) tab.kernels.push_back(random_kernel(rng, S, A, H));
    for (int i = 0; i < n; ++i) tab.initial_dists.push_back(random_dist(rng, S));

    std::vector<int> ssz(n, S), asz(n, A);
    MixedRadix sr(ssz), ar(asz);
    const long long NS = sr.total, NA = ar.total;
    std::vector<std::vector<std::vector<double>>> phi(
        H, std::vector<std::vector<double>>(NS, std::vector<double>(NA)));
    for (int h = 0; h < H; ++h)
        for (long long sj = 0; sj < NS; ++sj)
            for (long long aj = 0; aj < NA; ++aj) phi[h][sj][aj] = unif(rng);

    // u_i indexed by the other agents' joint (s,a); dense lookup tables.
    std::vector<std::vector<std::vector<double>>> u(n);
    const long long others = (NS / S) * (NA / A);
    for (int i = 0; i < n; ++i) {
        u[i].assign(H, std::vector<double>(std::max<long long>(others, 1), 0.0));
        for (int h = 0; h < H; ++h)
            for (long long k = 0; k < std::max<long long>(others, 1); ++k)
                u[i][h][k] = unif(rng);
    }

    tab.rewards.assign(n, phi);
    tab.welfare = phi;
    tab.potential = phi;
    std::vector<int> sdig, adig;
    for (int i = 0; i < n; ++i)
        for (int h = 0; h < H; ++h)
            for (long long sj = 0; sj < NS; ++sj) {
                sr.decode(sj, sdig);
                for (long long aj = 0; aj < NA; ++aj) {
                    ar.decode(aj, adig);
                    long long key = 0;
                    for (int j = 0; j < n; ++j) {
                        if (j == i) continue;
                        key = key * S + sdig[j];
                        key = key * A + adig[j];
                    }
                    tab.rewards[i][h][sj][aj] += u[i][h][key];
                }
            }
    tab.reward_min = 0.0;
    tab.reward_max = 1.0;
    return to_game(std::move(tab));
}

inline JointPolicy random_joint_policy(const GameDefinition& game, uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.05, 1.0);
    JointPolicy policy = uniform_policy(game);
    for (auto& agent : policy.agents)
        for (auto& hrows : agent.rows)
            for (auto& row : hrows) {
                double sum = 0.0;
                for (double& v : row) {
                    v = unif(rng);
                    sum += v;
                }
                for (double& v : row) v /= sum;
            }
    return policy;
}

/// Joint-chain forward distribution over joint states — the independent
/// oracle for the product-distribution identity.
inline std::vector<std::vector<double>> joint_chain_distribution(const GameDefinition& game,
                                                                 const JointPolicy& policy) {
    MixedRadix sr = game.state_radix();
    MixedRadix ar = game.action_radix();
    std::vector<std::vector<double>> d(game.horizon, std::vector<double>(sr.total, 0.0));
    std::vector<int> sdig, adig, ndig;
    for (long long sj = 0; sj < sr.total; ++sj) {
        sr.decode(sj, sdig);
        double w = 1.0;
        for (int i = 0; i < game.num_agents; ++i) w *= game.initial_dists[i][sdig[i]];
        d[0][sj] = w;
    }
    for (int h = 1; h <= game.horizon - 1; ++h) {
        for (long long sj = 0; sj < sr.total; ++sj) {
            if (d[h - 1][sj] == 0.0) continue;
            sr.decode(sj, sdig);
            for (long long aj = 0; aj < ar.total; ++aj) {
                ar.decode(aj, adig);
                double wa = d[h - 1][sj];
                for (int i = 0; i < game.num_agents; ++i)
                    wa *= policy.agents[i].rows[h - 1][sdig[i]][adig[i]];
                if (wa == 0.0) continue;
                for (long long nj = 0; nj < sr.total; ++nj) {
                    sr.decode(nj, ndig);
                    double p = 1.0;
                    for (int i = 0; i < game.num_agents; ++i)
                        p *= game.kernels[i].row(h, sdig[i], adig[i])[ndig[i]];
                    if (p != 0.0) d[h][nj] += wa * p;
                }
            }
        }
    }
    return d;
}

/// Series oracle for the utility-sharing weight: direct truncated summation of
/// (m-1)! sum_{i>=m} 1/i! / (e-1), independent of the library implementation.
inline double utility_f_series(int m) {
    long double acc = 0.0L;
    long double term = 1.0L;  // (m-1)!/i! at i=m is 1/m
    for (int i = m; i < m + 60; ++i) {
        term /= i;
        acc += term;
    }
    return static_cast<double>(acc / (std::exp(1.0L) - 1.0L));
}

/// Brute-force averaged Q via its definition: the joint Q-function with the
/// other agents' states and actions integrated out under their product
/// distributions and policies.
inline AgentTable averaged_q_bruteforce(const GameDefinition& game, const JointPolicy& policy,
                                        int agent) {
    JointQTable joint = joint_q_values(game, policy, agent);
    StateDistributionTable dists = state_distributions(game, policy);
    const int S = game.spaces[agent].num_states;
    const int A = game.spaces[agent].num_actions;
    AgentTable out(game.horizon, std::vector<std::vector<double>>(S, std::vector<double>(A, 0.0)));
    std::vector<int> sdig, adig;
    for (int h = 1; h <= game.horizon; ++h) {
        for (long long sj = 0; sj < joint.state_radix.total; ++sj) {
            joint.state_radix.decode(sj, sdig);
            double ws = 1.0;
            for (int j = 0; j < game.num_agents; ++j)
                if (j != agent) ws *= dists.of(j, h)[sdig[j]];
            if (ws == 0.0) continue;
            for (long long aj = 0; aj < joint.action_radix.total; ++aj) {
                joint.action_radix.decode(aj, adig);
                double w = ws;
                for (int j = 0; j < game.num_agents; ++j)
                    if (j != agent) w *= policy.agents[j].rows[h - 1][sdig[j]][adig[j]];
                if (w != 0.0) out[h - 1][sdig[agent]][adig[agent]] += w * joint.q[h - 1][sj][aj];
            }
        }
    }
    return out;
}

}  // namespace mpg::test
