#pragma once

#include <istream>
#include <ostream>
#include <sstream>
#include <thread>

#include "mpg/exact_eval.hpp"
#include "mpg/game.hpp"
#include "mpg/rng.hpp"

namespace mpg {

/// Seed spec for the splittable sampler: every draw is a pure function of
/// (master_seed, episode, agent, horizon, purpose tag).
struct RngSpec {
    uint64_t master_seed = 0;

    enum Tag : uint64_t { kInit = 1, kAction = 2, kTransition = 3 };

    double uniform(uint64_t episode, uint64_t agent, uint64_t horizon, Tag tag) const {
        return uniform_from_key(mix_tuple(master_seed, episode, agent, horizon, tag));
    }
};

struct TrajectoryBatch {
    int episodes = 0;
    int num_agents = 0;
    int horizon = 0;
    // states[k][i][h-1], actions[k][i][h-1]
    std::vector<std::vector<std::vector<int>>> states;
    std::vector<std::vector<std::vector<int>>> actions;
    std::string policy_id;
    RngSpec rng;
};

/// Samples T episodes; each agent's trajectory is drawn independently through
/// its own kernel (decoupled dynamics). Deterministic for a fixed RngSpec and
/// independent of the worker count.
inline TrajectoryBatch sample_episodes(const GameDefinition& game, const JointPolicy& policy,
                                       long long count, RngSpec rng,
                                       const std::string& policy_id = "", int threads = 1) {
    if (count < 1) throw std::invalid_argument("sample_episodes: count must be >= 1");
    TrajectoryBatch batch;
    batch.episodes = static_cast<int>(count);
    batch.num_agents = game.num_agents;
    batch.horizon = game.horizon;
    batch.policy_id = policy_id;
    batch.rng = rng;
    batch.states.assign(count, std::vector<std::vector<int>>(
                                   game.num_agents, std::vector<int>(game.horizon, 0)));
    batch.actions = batch.states;

    auto run_range = [&](long long first, long long last) {
        for (long long k = first; k < last; ++k) {
            for (int i = 0; i < game.num_agents; ++i) {
                const auto& rho = game.initial_dists[i];
                int s = sample_index(rho.data(), static_cast<int>(rho.size()),
                                     rng.uniform(k, i, 0, RngSpec::kInit));
                for (int h = 1; h <= game.horizon; ++h) {
                    const auto& row = policy.agents[i].rows[h - 1][s];
                    int a = sample_index(row.data(), static_cast<int>(row.size()),
                                         rng.uniform(k, i, h, RngSpec::kAction));
                    batch.states[k][i][h - 1] = s;
                    batch.actions[k][i][h - 1] = a;
                    if (h < game.horizon) {
                        const auto& trow = game.kernels[i].row(h, s, a);
                        s = sample_index(trow.data(), static_cast<int>(trow.size()),
                                         rng.uniform(k, i, h, RngSpec::kTransition));
                    }
                }
            }
        }
    };

    if (threads <= 1 || count < 2 * threads) {
        run_range(0, count);
    } else {
        std::vector<std::thread> pool;
        const long long chunk = (count + threads - 1) / threads;
        for (int t = 0; t < threads; ++t) {
            const long long first = t * chunk;
            const long long last = std::min<long long>(count, first + chunk);
            if (first >= last) break;
            pool.emplace_back(run_range, first, last);
        }
        for (auto& th : pool) th.join();
    }
    return batch;
}

/// Count-ratio transition estimates with the self-loop fallback for
/// unvisited (s,a) cells. p_hat[i][h-1][s][a] is a row over s'.
struct EstimatedTransitions {
    std::vector<std::vector<std::vector<std::vector<std::vector<double>>>>> p_hat;
    std::vector<std::vector<std::vector<std::vector<long long>>>> visits;  // [i][h-1][s][a]
    long long fallback_cells = 0;
};

inline EstimatedTransitions estimate_transitions(const GameDefinition& game,
                                                 const TrajectoryBatch& batch) {
    EstimatedTransitions est;
    est.p_hat.resize(game.num_agents);
    est.visits.resize(game.num_agents);
    for (int i = 0; i < game.num_agents; ++i) {
        const int S = game.spaces[i].num_states;
        const int A = game.spaces[i].num_actions;
        est.p_hat[i].assign(game.horizon - 1,
                            std::vector<std::vector<std::vector<double>>>(
                                S, std::vector<std::vector<double>>(A, std::vector<double>(S, 0.0))));
        est.visits[i].assign(game.horizon - 1, std::vector<std::vector<long long>>(
                                                   S, std::vector<long long>(A, 0)));
        for (int k = 0; k < batch.episodes; ++k) {
            for (int h = 1; h <= game.horizon - 1; ++h) {
                const int s = batch.states[k][i][h - 1];
                const int a = batch.actions[k][i][h - 1];
                const int sn = batch.states[k][i][h];
                est.p_hat[i][h - 1][s][a][sn] += 1.0;
                est.visits[i][h - 1][s][a] += 1;
            }
        }
        for (int h = 1; h <= game.horizon - 1; ++h) {
            for (int s = 0; s < S; ++s) {
                for (int a = 0; a < A; ++a) {
                    const long long n = est.visits[i][h - 1][s][a];
                    auto& row = est.p_hat[i][h - 1][s][a];
                    if (n > 0) {
                        for (double& v : row) v /= static_cast<double>(n);
                    } else {
                        row[s] = 1.0;  // 1{s' = s}
                        ++est.fallback_cells;
                    }
                }
            }
        }
    }
    return est;
}

/// On-policy averaged-reward estimate for one agent: for each (s_i, a_i),
/// the mean over episodes whose visited state at h equals s_i of the
/// counterfactual reward with (s_i, a_i) substituted; 0 when never visited.
/// The sampled own action is discarded — all a_i are evaluated.
struct EstimatedReward {
    AgentTable r_hat;                               // [h-1][s][a]
    std::vector<std::vector<long long>> visits;     // [h-1][s]
    long long fallback_cells = 0;
};

inline EstimatedReward estimate_averaged_reward(const GameDefinition& game,
                                                const TrajectoryBatch& batch, int agent) {
    const int S = game.spaces[agent].num_states;
    const int A = game.spaces[agent].num_actions;
    EstimatedReward est;
    est.r_hat.assign(game.horizon, std::vector<std::vector<double>>(S, std::vector<double>(A, 0.0)));
    est.visits.assign(game.horizon, std::vector<long long>(S, 0));

    // Episodes indexed by visited state first, so only visited rows query the oracle.
    std::vector<std::vector<std::vector<int>>> by_state(
        game.horizon, std::vector<std::vector<int>>(S));
    for (int k = 0; k < batch.episodes; ++k)
        for (int h = 1; h <= game.horizon; ++h)
            by_state[h - 1][batch.states[k][agent][h - 1]].push_back(k);

    std::vector<int> s_full(game.num_agents), a_full(game.num_agents);
    for (int h = 1; h <= game.horizon; ++h) {
        for (int s = 0; s < S; ++s) {
            const auto& eps = by_state[h - 1][s];
            est.visits[h - 1][s] = static_cast<long long>(eps.size());
            if (eps.empty()) {
                est.fallback_cells += A;
                continue;
            }
            for (int k : eps) {
                for (int j = 0; j < game.num_agents; ++j) {
                    s_full[j] = batch.states[k][j][h - 1];
                    a_full[j] = batch.actions[k][j][h - 1];
                }
                s_full[agent] = s;
                if (game.rewards_depend_on_actions) {
                    for (int a = 0; a < A; ++a) {
                        a_full[agent] = a;
                        est.r_hat[h - 1][s][a] += game.reward(agent, h, s_full, a_full);
                    }
                } else {
                    const double val = game.reward(agent, h, s_full, a_full);
                    for (int a = 0; a < A; ++a) est.r_hat[h - 1][s][a] += val;
                }
            }
            for (int a = 0; a < A; ++a) est.r_hat[h - 1][s][a] /= static_cast<double>(eps.size());
        }
    }
    return est;
}

/// Backward dynamic programming on the local space with estimated kernel and
/// averaged rewards substituted; terminal layer is the last-stage estimate.
inline AgentTable estimate_averaged_q(
    const GameDefinition& game, const JointPolicy& policy,
    const std::vector<std::vector<std::vector<std::vector<double>>>>& p_hat_agent,
    const AgentTable& r_hat_agent, int agent) {
    const int S = game.spaces[agent].num_states;
    const int A = game.spaces[agent].num_actions;
    const int H = game.horizon;
    if (static_cast<int>(r_hat_agent.size()) != H ||
        static_cast<int>(p_hat_agent.size()) != H - 1)
        throw std::invalid_argument("estimate_averaged_q: shape mismatch");

    AgentTable q(H, std::vector<std::vector<double>>(S, std::vector<double>(A, 0.0)));
    std::vector<double> vnext(S, 0.0);
    for (int h = H; h >= 1; --h) {
        if (h < H) {
            for (int s = 0; s < S; ++s) {
                double acc = 0.0;
                for (int a = 0; a < A; ++a) acc += policy.agents[agent].rows[h][s][a] * q[h][s][a];
                vnext[s] = acc;
            }
        }
        for (int s = 0; s < S; ++s) {
            for (int a = 0; a < A; ++a) {
                double val = r_hat_agent[h - 1][s][a];
                if (h < H) {
                    const auto& row = p_hat_agent[h - 1][s][a];
                    for (int sn = 0; sn < S; ++sn) val += row[sn] * vnext[sn];
                }
                q[h - 1][s][a] = val;
            }
        }
    }
    return q;
}

/// Monte-Carlo estimate of returns/welfare/potential for games beyond the
/// exact-enumeration cap. Only ever used behind an explicit opt-in; the
/// report is marked approximate.
inline EvaluationReport mc_expected_return(const GameDefinition& game, const JointPolicy& policy,
                                           long long episodes, RngSpec rng, int threads = 1) {
    TrajectoryBatch batch = sample_episodes(game, policy, episodes, rng, "mc-eval", threads);
    EvaluationReport rep;
    rep.approximate = true;
    rep.J.assign(game.num_agents, 0.0);
    double phi = 0.0;
    std::vector<int> s(game.num_agents), a(game.num_agents);
    for (int k = 0; k < batch.episodes; ++k) {
        for (int h = 1; h <= game.horizon; ++h) {
            for (int i = 0; i < game.num_agents; ++i) {
                s[i] = batch.states[k][i][h - 1];
                a[i] = batch.actions[k][i][h - 1];
            }
            for (int i = 0; i < game.num_agents; ++i) rep.J[i] += game.reward(i, h, s, a);
            rep.W += game.welfare(h, s, a);
            if (game.has_potential()) phi += game.potential(h, s, a);
        }
    }
    const double scale = 1.0 / static_cast<double>(batch.episodes);
    for (double& v : rep.J) v *= scale;
    rep.W *= scale;
    if (game.has_potential()) rep.Phi = phi * scale;
    return rep;
}

/// Full estimation state for one MA-SPI iteration, with provenance.
struct EstimatedModel {
    EstimatedTransitions transitions;
    std::vector<EstimatedReward> rewards;  // per agent
    std::vector<AgentTable> q_hat;         // per agent
    long long T_J = 0;
    long long T_K = 0;
    uint64_t master_seed = 0;
};

/// Columnar text dump: header then one row per (episode, agent, horizon).
inline void dump_batch(const TrajectoryBatch& batch, std::ostream& os) {
    os << "episode,agent,horizon,state,action\n";
    for (int k = 0; k < batch.episodes; ++k)
        for (int i = 0; i < batch.num_agents; ++i)
            for (int h = 1; h <= batch.horizon; ++h)
                os << k << ',' << i << ',' << h << ',' << batch.states[k][i][h - 1] << ','
                   << batch.actions[k][i][h - 1] << '\n';
}

inline TrajectoryBatch load_batch(const GameDefinition& game, std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || line != "episode,agent,horizon,state,action")
        throw std::invalid_argument("load_batch: bad header");
    struct Row {
        int k, i, h, s, a;
    };
    std::vector<Row> rows;
    int max_episode = -1;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        Row r{};
        char comma;
        std::istringstream ss(line);
        if (!(ss >> r.k >> comma >> r.i >> comma >> r.h >> comma >> r.s >> comma >> r.a))
            throw std::invalid_argument("load_batch: bad row '" + line + "'");
        if (r.i < 0 || r.i >= game.num_agents || r.h < 1 || r.h > game.horizon ||
            r.s < 0 || r.s >= game.spaces[r.i].num_states || r.a < 0 ||
            r.a >= game.spaces[r.i].num_actions)
            throw std::invalid_argument("load_batch: index out of range in '" + line + "'");
        max_episode = std::max(max_episode, r.k);
        rows.push_back(r);
    }
    TrajectoryBatch batch;
    batch.episodes = max_episode + 1;
    batch.num_agents = game.num_agents;
    batch.horizon = game.horizon;
    batch.states.assign(batch.episodes, std::vector<std::vector<int>>(
                                            game.num_agents, std::vector<int>(game.horizon, -1)));
    batch.actions = batch.states;
    for (const Row& r : rows) {
        batch.states[r.k][r.i][r.h - 1] = r.s;
        batch.actions[r.k][r.i][r.h - 1] = r.a;
    }
    for (const auto& ep : batch.states)
        for (const auto& ag : ep)
            for (int v : ag)
                if (v < 0) throw std::invalid_argument("load_batch: incomplete episode");
    return batch;
}

}  // namespace mpg
