#pragma once

#include <algorithm>
#include <limits>

#include "mpg/game.hpp"
#include "mpg/rng.hpp"

namespace mpg {

constexpr long long kDefaultEnumCap = 1'000'000;

/// Per-(horizon,state,action) table for one agent, indexed [h-1][s][a].
using AgentTable = std::vector<std::vector<std::vector<double>>>;

/// Visitation probabilities d[i][h-1][s].
struct StateDistributionTable {
    std::vector<std::vector<std::vector<double>>> d;

    const std::vector<double>& of(int agent, int h) const { return d[agent][h - 1]; }
};

struct AveragedTables {
    AgentTable rbar;  // averaged one-stage reward
    AgentTable qbar;  // averaged Q
    AgentTable abar;  // advantage: qbar - sum_a pi * qbar
};

struct EvaluationReport {
    std::vector<double> J;
    double W = 0.0;
    std::optional<double> Phi;
    std::vector<double> ne_gap;
    double ne_gap_total = 0.0;
    bool approximate = false;  // set only by the Monte-Carlo fallback path
};

inline std::vector<std::vector<double>> local_state_distributions(const GameDefinition& game,
                                                                  const LocalPolicy& policy,
                                                                  int agent) {
    const int S = game.spaces[agent].num_states;
    const int A = game.spaces[agent].num_actions;
    std::vector<std::vector<double>> d(game.horizon, std::vector<double>(S, 0.0));
    d[0] = game.initial_dists[agent];
    for (int h = 1; h <= game.horizon - 1; ++h) {
        for (int s = 0; s < S; ++s) {
            const double ds = d[h - 1][s];
            if (ds == 0.0) continue;
            for (int a = 0; a < A; ++a) {
                const double w = ds * policy.rows[h - 1][s][a];
                if (w == 0.0) continue;
                const auto& row = game.kernels[agent].row(h, s, a);
                for (int sn = 0; sn < S; ++sn) d[h][sn] += w * row[sn];
            }
        }
    }
    return d;
}

/// Forward recursion d_{h+1} = P^T (pi . d_h) per agent, d_1 = rho.
inline StateDistributionTable state_distributions(const GameDefinition& game,
                                                  const JointPolicy& policy) {
    StateDistributionTable out;
    out.d.resize(game.num_agents);
    for (int i = 0; i < game.num_agents; ++i)
        out.d[i] = local_state_distributions(game, policy.agents[i], i);
    return out;
}

namespace detail {

inline void check_cap(double product, long long cap, const char* what) {
    if (product > static_cast<double>(cap))
        throw SizeCapError(std::string(what) + ": enumeration size " +
                           std::to_string(static_cast<long long>(product)) + " exceeds cap " +
                           std::to_string(cap));
}

// Decoded digit lists for every joint index; digits[idx][i] is agent i's coordinate.
inline std::vector<std::vector<int>> decode_all(const MixedRadix& radix) {
    std::vector<std::vector<int>> digits(radix.total);
    std::vector<int> buf;
    for (long long idx = 0; idx < radix.total; ++idx) {
        radix.decode(idx, buf);
        digits[idx] = buf;
    }
    return digits;
}

}  // namespace detail

/// Joint Q-function of one agent over the full joint space, [h-1][joint_s][joint_a].
struct JointQTable {
    MixedRadix state_radix;
    MixedRadix action_radix;
    std::vector<std::vector<std::vector<double>>> q;
};

inline JointQTable joint_q_values(const GameDefinition& game, const JointPolicy& policy, int agent,
                                  long long cap = kDefaultEnumCap) {
    JointQTable out;
    out.state_radix = game.state_radix();
    out.action_radix = game.action_radix();
    const long long NS = out.state_radix.total;
    const long long NA = out.action_radix.total;
    detail::check_cap(static_cast<double>(NS) * static_cast<double>(NA), cap, "joint_q_values");

    const auto sdig = detail::decode_all(out.state_radix);
    const auto adig = detail::decode_all(out.action_radix);
    const int H = game.horizon;
    out.q.assign(H, std::vector<std::vector<double>>(NS, std::vector<double>(NA, 0.0)));

    std::vector<double> vnext(NS, 0.0);
    for (int h = H; h >= 1; --h) {
        if (h < H) {
            // vnext(s') = sum_{a'} prod_i pi_{i,h+1}(a'_i|s'_i) * q_{h+1}(s',a')
            for (long long sj = 0; sj < NS; ++sj) {
                double acc = 0.0;
                for (long long aj = 0; aj < NA; ++aj) {
                    double w = 1.0;
                    for (int i = 0; i < game.num_agents; ++i)
                        w *= policy.agents[i].rows[h][sdig[sj][i]][adig[aj][i]];
                    acc += w * out.q[h][sj][aj];
                }
                vnext[sj] = acc;
            }
        }
        for (long long sj = 0; sj < NS; ++sj) {
            for (long long aj = 0; aj < NA; ++aj) {
                double val = game.reward(agent, h, sdig[sj], adig[aj]);
                if (h < H) {
                    for (long long sn = 0; sn < NS; ++sn) {
                        double p = 1.0;
                        for (int i = 0; i < game.num_agents; ++i) {
                            p *= game.kernels[i].row(h, sdig[sj][i], adig[aj][i])[sdig[sn][i]];
                            if (p == 0.0) break;
                        }
                        if (p != 0.0) val += p * vnext[sn];
                    }
                }
                out.q[h - 1][sj][aj] = val;
            }
        }
    }
    return out;
}

namespace detail {

// Enumerates the joint states (and actions, when the oracles depend on them)
// of all agents except `agent`, calling fn(weight, s_full, a_full) with the
// excluded agent's coordinates left for the caller to fill.
template <typename Fn>
void for_each_other_profile(const GameDefinition& game, const StateDistributionTable& dists,
                            const JointPolicy& policy, int agent, int h, long long cap, Fn&& fn) {
    std::vector<int> others;
    for (int j = 0; j < game.num_agents; ++j)
        if (j != agent) others.push_back(j);

    double product = 1.0;
    for (int j : others) {
        product *= game.spaces[j].num_states;
        if (game.rewards_depend_on_actions) product *= game.spaces[j].num_actions;
    }
    check_cap(product, cap, "averaged expectation");

    std::vector<int> s_full(game.num_agents, 0);
    std::vector<int> a_full(game.num_agents, 0);

    // Odometer over others' states (and actions when relevant).
    std::vector<int> s_other(others.size(), 0);
    std::vector<int> a_other(others.size(), 0);
    const bool with_actions = game.rewards_depend_on_actions;
    while (true) {
        double w = 1.0;
        for (size_t k = 0; k < others.size(); ++k) {
            int j = others[k];
            w *= dists.of(j, h)[s_other[k]];
            if (with_actions) w *= policy.agents[j].rows[h - 1][s_other[k]][a_other[k]];
        }
        if (w != 0.0) {
            for (size_t k = 0; k < others.size(); ++k) {
                s_full[others[k]] = s_other[k];
                a_full[others[k]] = a_other[k];
            }
            fn(w, s_full, a_full);
        }
        // advance odometer: actions fastest, then states
        size_t k = 0;
        for (; k < others.size(); ++k) {
            if (with_actions) {
                if (++a_other[k] < game.spaces[others[k]].num_actions) break;
                a_other[k] = 0;
            }
            if (++s_other[k] < game.spaces[others[k]].num_states) break;
            s_other[k] = 0;
        }
        if (k == others.size()) break;
    }
}

}  // namespace detail

/// Averaged one-stage reward rbar[h][s_i][a_i]: expectation of the reward
/// oracle over the other agents' state distributions and policies, with this
/// agent's (s_i, a_i) substituted counterfactually.
inline AgentTable averaged_reward(const GameDefinition& game, const JointPolicy& policy, int agent,
                                  long long cap = kDefaultEnumCap,
                                  const StateDistributionTable* dists_in = nullptr) {
    StateDistributionTable local;
    if (!dists_in) {
        local = state_distributions(game, policy);
        dists_in = &local;
    }
    const int S = game.spaces[agent].num_states;
    const int A = game.spaces[agent].num_actions;
    AgentTable rbar(game.horizon, std::vector<std::vector<double>>(S, std::vector<double>(A, 0.0)));
    for (int h = 1; h <= game.horizon; ++h) {
        detail::for_each_other_profile(
            game, *dists_in, policy, agent, h, cap,
            [&](double w, std::vector<int>& s_full, std::vector<int>& a_full) {
                for (int s = 0; s < S; ++s) {
                    s_full[agent] = s;
                    if (game.rewards_depend_on_actions) {
                        for (int a = 0; a < A; ++a) {
                            a_full[agent] = a;
                            rbar[h - 1][s][a] += w * game.reward(agent, h, s_full, a_full);
                        }
                    } else {
                        const double val = w * game.reward(agent, h, s_full, a_full);
                        for (int a = 0; a < A; ++a) rbar[h - 1][s][a] += val;
                    }
                }
            });
    }
    return rbar;
}

namespace detail {

// Backward Bellman recursion on the local space given one-stage values and a
// kernel; fills qbar (and abar from the policy).
inline void local_backward_q(const GameDefinition& game, const LocalPolicy& pi, int agent,
                             const AgentTable& rbar, AgentTable& qbar) {
    const int S = game.spaces[agent].num_states;
    const int A = game.spaces[agent].num_actions;
    const int H = game.horizon;
    qbar.assign(H, std::vector<std::vector<double>>(S, std::vector<double>(A, 0.0)));
    std::vector<double> vnext(S, 0.0);
    for (int h = H; h >= 1; --h) {
        if (h < H) {
            for (int s = 0; s < S; ++s) {
                double acc = 0.0;
                for (int a = 0; a < A; ++a) acc += pi.rows[h][s][a] * qbar[h][s][a];
                vnext[s] = acc;
            }
        }
        for (int s = 0; s < S; ++s) {
            for (int a = 0; a < A; ++a) {
                double val = rbar[h - 1][s][a];
                if (h < H) {
                    const auto& row = game.kernels[agent].row(h, s, a);
                    for (int sn = 0; sn < S; ++sn) val += row[sn] * vnext[sn];
                }
                qbar[h - 1][s][a] = val;
            }
        }
    }
}

}  // namespace detail

/// Averaged Q and advantage tables via the local Bellman recursion.
inline AveragedTables averaged_q(const GameDefinition& game, const JointPolicy& policy, int agent,
                                 long long cap = kDefaultEnumCap,
                                 const StateDistributionTable* dists_in = nullptr) {
    AveragedTables out;
    out.rbar = averaged_reward(game, policy, agent, cap, dists_in);
    detail::local_backward_q(game, policy.agents[agent], agent, out.rbar, out.qbar);
    const int S = game.spaces[agent].num_states;
    const int A = game.spaces[agent].num_actions;
    out.abar.assign(game.horizon,
                    std::vector<std::vector<double>>(S, std::vector<double>(A, 0.0)));
    for (int h = 1; h <= game.horizon; ++h) {
        for (int s = 0; s < S; ++s) {
            double mean = 0.0;
            for (int a = 0; a < A; ++a)
                mean += policy.agents[agent].rows[h - 1][s][a] * out.qbar[h - 1][s][a];
            for (int a = 0; a < A; ++a) out.abar[h - 1][s][a] = out.qbar[h - 1][s][a] - mean;
        }
    }
    return out;
}

namespace detail {

// Expectation of a stage oracle under the product state distribution (and the
// product policy when the oracle depends on actions), summed over horizons.
inline double stage_expectation_sum(const GameDefinition& game, const JointPolicy& policy,
                                    const StateDistributionTable& dists, const StageFn& oracle,
                                    long long cap) {
    MixedRadix sr = game.state_radix();
    double product = static_cast<double>(sr.total);
    MixedRadix ar;
    if (game.rewards_depend_on_actions) {
        ar = game.action_radix();
        product *= static_cast<double>(ar.total);
    }
    check_cap(product, cap, "expected_return");

    const auto sdig = decode_all(sr);
    std::vector<int> a_full(game.num_agents, 0);
    double total = 0.0;
    for (int h = 1; h <= game.horizon; ++h) {
        for (long long sj = 0; sj < sr.total; ++sj) {
            double ws = 1.0;
            for (int i = 0; i < game.num_agents; ++i) ws *= dists.of(i, h)[sdig[sj][i]];
            if (ws == 0.0) continue;
            if (!game.rewards_depend_on_actions) {
                total += ws * oracle(h, sdig[sj], a_full);
            } else {
                std::vector<int> adig;
                for (long long aj = 0; aj < ar.total; ++aj) {
                    ar.decode(aj, adig);
                    double w = ws;
                    for (int i = 0; i < game.num_agents; ++i)
                        w *= policy.agents[i].rows[h - 1][sdig[sj][i]][adig[i]];
                    if (w != 0.0) total += w * oracle(h, sdig[sj], adig);
                }
            }
        }
    }
    return total;
}

}  // namespace detail

/// Exact J_i, welfare and potential by forward accumulation over the product
/// of per-agent state distributions.
inline EvaluationReport expected_return(const GameDefinition& game, const JointPolicy& policy,
                                        long long cap = kDefaultEnumCap) {
    EvaluationReport rep;
    StateDistributionTable dists = state_distributions(game, policy);
    rep.J.resize(game.num_agents, 0.0);
    for (int i = 0; i < game.num_agents; ++i) {
        StageFn ri = [&game, i](int h, const std::vector<int>& s, const std::vector<int>& a) {
            return game.reward(i, h, s, a);
        };
        rep.J[i] = detail::stage_expectation_sum(game, policy, dists, ri, cap);
    }
    rep.W = detail::stage_expectation_sum(game, policy, dists, game.welfare, cap);
    if (game.has_potential())
        rep.Phi = detail::stage_expectation_sum(game, policy, dists, game.potential, cap);
    return rep;
}

/// Best response of one agent against the others' fixed policies: a
/// finite-horizon MDP on the local space with rewards rbar, solved by backward
/// value iteration. Greedy ties break toward the lowest action index.
inline std::pair<LocalPolicy, double> best_response(const GameDefinition& game,
                                                    const JointPolicy& policy, int agent,
                                                    long long cap = kDefaultEnumCap,
                                                    const AgentTable* rbar_in = nullptr) {
    AgentTable local;
    if (!rbar_in) {
        local = averaged_reward(game, policy, agent, cap);
        rbar_in = &local;
    }
    const AgentTable& rbar = *rbar_in;
    const int S = game.spaces[agent].num_states;
    const int A = game.spaces[agent].num_actions;
    const int H = game.horizon;

    LocalPolicy br;
    br.rows.assign(H, std::vector<std::vector<double>>(S, std::vector<double>(A, 0.0)));
    std::vector<double> vnext(S, 0.0), vcur(S, 0.0);
    for (int h = H; h >= 1; --h) {
        for (int s = 0; s < S; ++s) {
            double best = -std::numeric_limits<double>::infinity();
            int best_a = 0;
            for (int a = 0; a < A; ++a) {
                double val = rbar[h - 1][s][a];
                if (h < H) {
                    const auto& row = game.kernels[agent].row(h, s, a);
                    for (int sn = 0; sn < S; ++sn) val += row[sn] * vnext[sn];
                }
                if (val > best) {
                    best = val;
                    best_a = a;
                }
            }
            vcur[s] = best;
            br.rows[h - 1][s][best_a] = 1.0;
        }
        vnext = vcur;
    }
    double value = 0.0;
    for (int s = 0; s < S; ++s) value += game.initial_dists[agent][s] * vnext[s];
    return {std::move(br), value};
}

/// NE gaps per agent plus the exact returns/welfare/potential of the policy.
inline EvaluationReport ne_gap(const GameDefinition& game, const JointPolicy& policy,
                               long long cap = kDefaultEnumCap) {
    EvaluationReport rep;
    StateDistributionTable dists = state_distributions(game, policy);
    rep.J.resize(game.num_agents, 0.0);
    rep.ne_gap.resize(game.num_agents, 0.0);
    for (int i = 0; i < game.num_agents; ++i) {
        AveragedTables tabs = averaged_q(game, policy, i, cap, &dists);
        double J = 0.0;
        for (int s = 0; s < game.spaces[i].num_states; ++s) {
            double vs = 0.0;
            for (int a = 0; a < game.spaces[i].num_actions; ++a)
                vs += policy.agents[i].rows[0][s][a] * tabs.qbar[0][s][a];
            J += game.initial_dists[i][s] * vs;
        }
        rep.J[i] = J;
        auto [br, value] = best_response(game, policy, i, cap, &tabs.rbar);
        (void)br;
        rep.ne_gap[i] = value - J;
        rep.ne_gap_total += rep.ne_gap[i];
    }
    rep.W = detail::stage_expectation_sum(game, policy, dists, game.welfare, cap);
    if (game.has_potential())
        rep.Phi = detail::stage_expectation_sum(game, policy, dists, game.potential, cap);
    return rep;
}

/// Welfare of the best centralized (joint-state-conditioned) policy — an upper
/// bound on the optimum over the local policy class.
inline double centralized_optimal_welfare(const GameDefinition& game,
                                          long long cap = kDefaultEnumCap) {
    MixedRadix sr = game.state_radix();
    MixedRadix ar = game.action_radix();
    detail::check_cap(static_cast<double>(sr.total) * static_cast<double>(ar.total), cap,
                      "centralized_optimal_welfare");
    const auto sdig = detail::decode_all(sr);
    const auto adig = detail::decode_all(ar);
    const int H = game.horizon;

    std::vector<double> vnext(sr.total, 0.0), vcur(sr.total, 0.0);
    for (int h = H; h >= 1; --h) {
        for (long long sj = 0; sj < sr.total; ++sj) {
            double best = -std::numeric_limits<double>::infinity();
            for (long long aj = 0; aj < ar.total; ++aj) {
                double val = game.welfare(h, sdig[sj], adig[aj]);
                if (h < H) {
                    for (long long sn = 0; sn < sr.total; ++sn) {
                        double p = 1.0;
                        for (int i = 0; i < game.num_agents; ++i) {
                            p *= game.kernels[i].row(h, sdig[sj][i], adig[aj][i])[sdig[sn][i]];
                            if (p == 0.0) break;
                        }
                        if (p != 0.0) val += p * vnext[sn];
                    }
                }
                best = std::max(best, val);
            }
            vcur[sj] = best;
        }
        vnext = vcur;
    }
    double total = 0.0;
    for (long long sj = 0; sj < sr.total; ++sj) {
        double w = 1.0;
        for (int i = 0; i < game.num_agents; ++i) w *= game.initial_dists[i][sdig[sj][i]];
        if (w != 0.0) total += w * vnext[sj];
    }
    return total;
}

struct PotentialCheckReport {
    bool stage_exhaustive = false;
    long long stage_checks = 0;
    long long policy_checks = 0;
    std::vector<std::string> witnesses;

    bool ok() const { return witnesses.empty(); }
};

/// Checks the stage-potential identity (reward difference under unilateral
/// substitutions equals phi difference) and the induced identity dJ_i = dPhi.
inline PotentialCheckReport verify_potential(const GameDefinition& game, long long trials,
                                             uint64_t seed, long long cap = kDefaultEnumCap) {
    if (!game.has_potential())
        throw std::invalid_argument("verify_potential: game carries no potential oracle");
    PotentialCheckReport report;
    constexpr double kStageTol = 1e-9;
    constexpr double kPolicyTol = 1e-8;

    MixedRadix sr = game.state_radix();
    MixedRadix ar = game.action_radix();
    double deviations = 0.0;
    for (int i = 0; i < game.num_agents; ++i)
        deviations += static_cast<double>(game.spaces[i].num_states) * game.spaces[i].num_actions;
    const double exhaustive_size = static_cast<double>(game.horizon) *
                                   static_cast<double>(sr.total) * static_cast<double>(ar.total) *
                                   deviations;

    std::vector<int> s(game.num_agents), a(game.num_agents), s2(game.num_agents),
        a2(game.num_agents);
    auto check_tuple = [&](int h, int i) {
        const double dr = game.reward(i, h, s2, a2) - game.reward(i, h, s, a);
        const double dphi = game.potential(h, s2, a2) - game.potential(h, s, a);
        ++report.stage_checks;
        if (std::abs(dr - dphi) > kStageTol) {
            report.witnesses.push_back(
                "stage: h=" + std::to_string(h) + " agent=" + std::to_string(i) +
                " dr=" + std::to_string(dr) + " dphi=" + std::to_string(dphi));
        }
    };

    if (exhaustive_size <= static_cast<double>(cap) * 8.0) {
        report.stage_exhaustive = true;
        for (int h = 1; h <= game.horizon; ++h) {
            for (long long sj = 0; sj < sr.total; ++sj) {
                sr.decode(sj, s);
                for (long long aj = 0; aj < ar.total; ++aj) {
                    ar.decode(aj, a);
                    for (int i = 0; i < game.num_agents; ++i) {
                        s2 = s;
                        a2 = a;
                        for (int si = 0; si < game.spaces[i].num_states; ++si) {
                            for (int ai = 0; ai < game.spaces[i].num_actions; ++ai) {
                                s2[i] = si;
                                a2[i] = ai;
                                check_tuple(h, i);
                            }
                        }
                    }
                }
            }
        }
    } else {
        DetRng rng(splitmix64(seed) ^ 0x5747414745ULL);
        for (long long k = 0; k < trials; ++k) {
            const int h = 1 + rng.uniform_int(game.horizon);
            const int i = rng.uniform_int(game.num_agents);
            for (int j = 0; j < game.num_agents; ++j) {
                s[j] = rng.uniform_int(game.spaces[j].num_states);
                a[j] = rng.uniform_int(game.spaces[j].num_actions);
            }
            s2 = s;
            a2 = a;
            s2[i] = rng.uniform_int(game.spaces[i].num_states);
            a2[i] = rng.uniform_int(game.spaces[i].num_actions);
            check_tuple(h, i);
        }
    }

    // Policy check: random pairs differing in one agent's policy.
    DetRng rng(splitmix64(seed) ^ 0x504F4C49435953ULL);
    auto random_local = [&](int agent) {
        LocalPolicy lp;
        lp.rows.assign(game.horizon,
                       std::vector<std::vector<double>>(game.spaces[agent].num_states));
        for (int h = 0; h < game.horizon; ++h)
            for (int st = 0; st < game.spaces[agent].num_states; ++st) {
                auto& row = lp.rows[h][st];
                row.resize(game.spaces[agent].num_actions);
                double sum = 0.0;
                for (double& v : row) {
                    v = -std::log(1.0 - rng.uniform());
                    sum += v;
                }
                for (double& v : row) v /= sum;
            }
        return lp;
    };
    for (long long k = 0; k < trials; ++k) {
        JointPolicy pi;
        pi.agents.resize(game.num_agents);
        for (int j = 0; j < game.num_agents; ++j) pi.agents[j] = random_local(j);
        const int i = rng.uniform_int(game.num_agents);
        JointPolicy pi2 = pi;
        pi2.agents[i] = random_local(i);

        EvaluationReport e1 = expected_return(game, pi, cap);
        EvaluationReport e2 = expected_return(game, pi2, cap);
        ++report.policy_checks;
        const double dj = e2.J[i] - e1.J[i];
        const double dphi = *e2.Phi - *e1.Phi;
        if (std::abs(dj - dphi) > kPolicyTol) {
            report.witnesses.push_back("policy: trial=" + std::to_string(k) +
                                       " agent=" + std::to_string(i) + " dJ=" + std::to_string(dj) +
                                       " dPhi=" + std::to_string(dphi));
        }
    }
    return report;
}

}  // namespace mpg
