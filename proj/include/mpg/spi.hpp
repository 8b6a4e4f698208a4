#pragma once

#include <chrono>

#include "mpg/exact_eval.hpp"
#include "mpg/sampling.hpp"

namespace mpg {

/// Default schedule eta_t = 1/sqrt(4 n^2 H^3 t), clamped to <= 1.
inline double stepsize(long long t, int n, int H) {
    if (t < 1 || n < 1 || H < 1) throw std::invalid_argument("stepsize: t, n, H must be >= 1");
    const double denom = std::sqrt(4.0 * n * n * static_cast<double>(H) * H * H * t);
    return std::min(1.0, 1.0 / denom);
}

struct StepsizeSchedule {
    enum class Kind { Theory, Constant, InvSqrt };
    Kind kind = Kind::Theory;
    double value = 0.0;

    double eta(long long t, int n, int H) const {
        switch (kind) {
            case Kind::Theory: return stepsize(t, n, H);
            case Kind::Constant: return std::min(1.0, value);
            case Kind::InvSqrt: return std::min(1.0, value / std::sqrt(static_cast<double>(t)));
        }
        return stepsize(t, n, H);
    }
};

struct SpiConfig {
    long long T_G = 40;
    long long T_J = 800;
    long long T_K = 50000;
    uint64_t master_seed = 17;
    StepsizeSchedule schedule;         // default: the theory formula
    bool exact_eval_logging = true;    // exact NE-gap/welfare/potential per iteration
    bool per_agent_rollouts = false;   // literal per-agent D_J collection
    bool use_exact_q = false;          // bypass estimation (epsilon_Q = 0)
    bool debug_checks = false;         // per-iteration ascent / Q-error bound asserts
    long long enum_cap = kDefaultEnumCap;
    int threads = 1;
};

struct IterationLog {
    long long t = 0;
    double eta = 0.0;
    std::vector<double> q_err;   // per agent, max |q_hat - qbar|; NaN when not measured
    double q_err_max = std::numeric_limits<double>::quiet_NaN();
    std::vector<double> ne_gap;  // per agent; NaN when exact logging is off
    double ne_gap_total = std::numeric_limits<double>::quiet_NaN();
    double welfare = std::numeric_limits<double>::quiet_NaN();
    std::optional<double> potential;
    double sum_max_abar = std::numeric_limits<double>::quiet_NaN();  // sum_i sum_h max Abar
    double min_visitation = std::numeric_limits<double>::quiet_NaN();
    long long r_fallback_cells = 0;
    double wall_seconds = 0.0;
};

struct AscentCheck {
    long long t = 0;
    double phi_before = 0.0;
    double phi_after = 0.0;
    double eta = 0.0;
    double sum_max_abar = 0.0;
    double min_visitation = 0.0;  // of the updated policy
    bool ok = false;
};

struct SpiResult {
    JointPolicy final_policy;
    std::vector<IterationLog> logs;
    long long argmin_t = -1;
    double min_gap = std::numeric_limits<double>::quiet_NaN();
    long long p_fallback_cells = 0;
    std::vector<AscentCheck> ascent_checks;       // debug_checks && use_exact_q && potential
    std::vector<std::string> bound_violations;    // debug_checks && sampling
};

/// Deterministic greedy policy of a Q table; ties break to the lowest index.
inline LocalPolicy greedy_from_q(const AgentTable& q) {
    LocalPolicy greedy;
    greedy.rows.resize(q.size());
    for (size_t h = 0; h < q.size(); ++h) {
        greedy.rows[h].resize(q[h].size());
        for (size_t s = 0; s < q[h].size(); ++s) {
            const auto& row = q[h][s];
            int best = 0;
            for (size_t a = 0; a < row.size(); ++a) {
                if (!std::isfinite(row[a]))
                    throw std::invalid_argument("greedy_from_q: non-finite Q entry");
                if (row[a] > row[best]) best = static_cast<int>(a);
            }
            greedy.rows[h][s].assign(row.size(), 0.0);
            greedy.rows[h][s][best] = 1.0;
        }
    }
    return greedy;
}

/// Simultaneous soft update: every agent mixes from the same snapshot.
inline JointPolicy spi_update(const JointPolicy& policy, const std::vector<LocalPolicy>& greedy,
                              double eta) {
    if (!(eta > 0.0 && eta <= 1.0)) throw std::invalid_argument("spi_update: eta outside (0,1]");
    if (greedy.size() != policy.agents.size())
        throw std::invalid_argument("spi_update: agent count mismatch");
    JointPolicy next;
    next.agents.reserve(policy.agents.size());
    for (size_t i = 0; i < policy.agents.size(); ++i)
        next.agents.push_back(mix_policies(policy.agents[i], greedy[i], eta));
    return next;
}

namespace detail {

inline double welfare_expectation(const GameDefinition& game, const JointPolicy& policy,
                                  const StateDistributionTable& dists, long long cap) {
    return stage_expectation_sum(game, policy, dists, game.welfare, cap);
}

inline std::optional<double> potential_expectation(const GameDefinition& game,
                                                   const JointPolicy& policy,
                                                   const StateDistributionTable& dists,
                                                   long long cap) {
    if (!game.has_potential()) return std::nullopt;
    return stage_expectation_sum(game, policy, dists, game.potential, cap);
}

inline double min_visitation(const StateDistributionTable& dists) {
    double lo = std::numeric_limits<double>::infinity();
    for (const auto& agent : dists.d)
        for (const auto& dh : agent)
            for (double v : dh) lo = std::min(lo, v);
    return lo;
}

inline double table_max_abs_diff(const AgentTable& a, const AgentTable& b) {
    double worst = 0.0;
    for (size_t h = 0; h < a.size(); ++h)
        for (size_t s = 0; s < a[h].size(); ++s)
            for (size_t x = 0; x < a[h][s].size(); ++x)
                worst = std::max(worst, std::abs(a[h][s][x] - b[h][s][x]));
    return worst;
}

}  // namespace detail

/// The MA-SPI loop: pre-collection + transition estimation once, then T_G
/// rounds of on-policy collection, averaged-reward estimation, backward DP for
/// Q-hat, and the simultaneous soft update from the snapshot policy.
inline SpiResult run(const GameDefinition& game, const SpiConfig& config) {
    {
        ValidationReport v = validate_game(game);
        if (!v.ok()) throw std::invalid_argument("run: invalid game: " + v.violations.front());
    }
    if (config.T_G < 1 || config.T_J < 1 || config.T_K < 1)
        throw std::invalid_argument("run: T_G, T_J, T_K must be >= 1");

    const int n = game.num_agents;
    const int H = game.horizon;
    SpiResult result;
    JointPolicy policy = uniform_policy(game);

    EstimatedTransitions transitions;
    std::vector<double> eps_p(n, 0.0);  // measured per agent, for debug bound checks
    if (!config.use_exact_q) {
        RngSpec pre{mix_tuple(config.master_seed, 0, 0, 0, 101)};
        TrajectoryBatch dk =
            sample_episodes(game, policy, config.T_K, pre, "uniform", config.threads);
        transitions = estimate_transitions(game, dk);
        result.p_fallback_cells = transitions.fallback_cells;
        if (config.debug_checks) {
            for (int i = 0; i < n; ++i)
                for (int h = 1; h <= H - 1; ++h)
                    for (int s = 0; s < game.spaces[i].num_states; ++s)
                        for (int a = 0; a < game.spaces[i].num_actions; ++a) {
                            const auto& row = game.kernels[i].row(h, s, a);
                            const auto& hat = transitions.p_hat[i][h - 1][s][a];
                            for (size_t sn = 0; sn < row.size(); ++sn)
                                eps_p[i] = std::max(eps_p[i], std::abs(hat[sn] - row[sn]));
                        }
        }
    }

    const double reward_bound = std::max(std::abs(game.reward_min), std::abs(game.reward_max));
    double pending_sum_max_abar = 0.0;
    double pending_phi = 0.0;
    double pending_eta = 0.0;
    bool pending = false;

    auto record_ascent = [&](long long t_done, const StateDistributionTable& dists_after,
                             double phi_after) {
        AscentCheck chk;
        chk.t = t_done;
        chk.phi_before = pending_phi;
        chk.phi_after = phi_after;
        chk.eta = pending_eta;
        chk.sum_max_abar = pending_sum_max_abar;
        chk.min_visitation = detail::min_visitation(dists_after);
        const double rhs = chk.min_visitation * chk.eta * chk.sum_max_abar -
                           4.0 * n * n * std::pow(static_cast<double>(H), 3) * chk.eta * chk.eta;
        chk.ok = chk.phi_after - chk.phi_before >= rhs - 1e-8;
        result.ascent_checks.push_back(chk);
    };

    for (long long t = 1; t <= config.T_G; ++t) {
        const auto started = std::chrono::steady_clock::now();
        IterationLog log;
        log.t = t;
        log.eta = config.schedule.eta(t, n, H);

        {
            ValidationReport v = validate_policy(game, policy);
            if (!v.ok())
                throw std::logic_error("run: iterate policy invalid: " + v.violations.front());
        }

        StateDistributionTable dists = state_distributions(game, policy);
        log.min_visitation = detail::min_visitation(dists);

        const bool want_exact = config.use_exact_q || config.exact_eval_logging;
        std::vector<AveragedTables> exact_tabs(want_exact ? n : 0);
        if (want_exact)
            for (int i = 0; i < n; ++i)
                exact_tabs[i] = averaged_q(game, policy, i, config.enum_cap, &dists);

        // Q tables driving the update.
        std::vector<AgentTable> q_used(n);
        std::vector<double> eps_r(n, 0.0);
        if (config.use_exact_q) {
            for (int i = 0; i < n; ++i) q_used[i] = exact_tabs[i].qbar;
        } else {
            TrajectoryBatch shared;
            if (!config.per_agent_rollouts) {
                RngSpec spec{mix_tuple(config.master_seed, static_cast<uint64_t>(t), 0, 0, 102)};
                shared = sample_episodes(game, policy, config.T_J, spec,
                                         "iter-" + std::to_string(t), config.threads);
            }
            for (int i = 0; i < n; ++i) {
                const TrajectoryBatch* batch = &shared;
                TrajectoryBatch own;
                if (config.per_agent_rollouts) {
                    RngSpec spec{mix_tuple(config.master_seed, static_cast<uint64_t>(t),
                                           static_cast<uint64_t>(i + 1), 0, 102)};
                    own = sample_episodes(game, policy, config.T_J, spec,
                                          "iter-" + std::to_string(t) + "-agent-" +
                                              std::to_string(i),
                                          config.threads);
                    batch = &own;
                }
                EstimatedReward r_hat = estimate_averaged_reward(game, *batch, i);
                log.r_fallback_cells += r_hat.fallback_cells;
                q_used[i] = estimate_averaged_q(game, policy, transitions.p_hat[i], r_hat.r_hat, i);
                if (config.debug_checks && config.exact_eval_logging) {
                    eps_r[i] = detail::table_max_abs_diff(r_hat.r_hat, exact_tabs[i].rbar);
                    for (int h = 1; h <= H; ++h) {
                        double err = 0.0;
                        for (int s = 0; s < game.spaces[i].num_states; ++s)
                            for (int a = 0; a < game.spaces[i].num_actions; ++a)
                                err = std::max(err, std::abs(q_used[i][h - 1][s][a] -
                                                             exact_tabs[i].qbar[h - 1][s][a]));
                        const double bound =
                            eps_r[i] * (H + 1 - h) +
                            eps_p[i] * H * reward_bound * (H + 1 - h) * game.spaces[i].num_states;
                        if (err > bound + 1e-9)
                            result.bound_violations.push_back(
                                "t=" + std::to_string(t) + " agent=" + std::to_string(i) +
                                " h=" + std::to_string(h) + " err=" + std::to_string(err) +
                                " bound=" + std::to_string(bound));
                    }
                }
            }
        }

        double phi_now = 0.0;
        if (config.exact_eval_logging) {
            log.ne_gap.resize(n);
            log.q_err.resize(n);
            log.ne_gap_total = 0.0;
            log.sum_max_abar = 0.0;
            for (int i = 0; i < n; ++i) {
                double J = 0.0;
                for (int s = 0; s < game.spaces[i].num_states; ++s) {
                    double vs = 0.0;
                    for (int a = 0; a < game.spaces[i].num_actions; ++a)
                        vs += policy.agents[i].rows[0][s][a] * exact_tabs[i].qbar[0][s][a];
                    J += game.initial_dists[i][s] * vs;
                }
                auto [br, value] =
                    best_response(game, policy, i, config.enum_cap, &exact_tabs[i].rbar);
                (void)br;
                log.ne_gap[i] = value - J;
                log.ne_gap_total += log.ne_gap[i];
                log.q_err[i] = config.use_exact_q
                                   ? 0.0
                                   : detail::table_max_abs_diff(q_used[i], exact_tabs[i].qbar);
                for (int h = 1; h <= H; ++h) {
                    double mx = -std::numeric_limits<double>::infinity();
                    for (const auto& row : exact_tabs[i].abar[h - 1])
                        for (double v : row) mx = std::max(mx, v);
                    log.sum_max_abar += mx;
                }
            }
            log.q_err_max = *std::max_element(log.q_err.begin(), log.q_err.end());
            log.welfare = detail::welfare_expectation(game, policy, dists, config.enum_cap);
            auto phi = detail::potential_expectation(game, policy, dists, config.enum_cap);
            log.potential = phi;
            if (phi) phi_now = *phi;
        }

        if (pending && config.debug_checks && config.use_exact_q && game.has_potential() &&
            config.exact_eval_logging)
            record_ascent(t - 1, dists, phi_now);

        std::vector<LocalPolicy> greedy(n);
        for (int i = 0; i < n; ++i) greedy[i] = greedy_from_q(q_used[i]);
        pending_phi = phi_now;
        pending_eta = log.eta;
        pending_sum_max_abar = log.sum_max_abar;
        pending = true;
        policy = spi_update(policy, greedy, log.eta);

        log.wall_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        result.logs.push_back(std::move(log));
    }

    if (pending && config.debug_checks && config.use_exact_q && game.has_potential() &&
        config.exact_eval_logging) {
        StateDistributionTable dists = state_distributions(game, policy);
        auto phi = detail::potential_expectation(game, policy, dists, config.enum_cap);
        record_ascent(config.T_G, dists, phi.value_or(0.0));
    }

    if (config.exact_eval_logging) {
        result.min_gap = std::numeric_limits<double>::infinity();
        for (const auto& log : result.logs) {
            if (log.ne_gap_total < result.min_gap) {
                result.min_gap = log.ne_gap_total;
                result.argmin_t = log.t;
            }
        }
    }
    result.final_policy = std::move(policy);
    return result;
}

struct SampleSizeInput {
    int n = 1;
    int H = 1;
    std::vector<int> state_sizes;
    std::vector<int> action_sizes;
    double phi_range = 1.0;  // Phi_max - Phi_min
    double c = 1.0;          // sufficient-exploration constant
    double epsilon = 0.1;
    double delta = 0.1;
};

struct SampleSizeResult {
    double T_G = 0.0;
    double T_J = 0.0;
    double T_K = 0.0;
};

/// Sample-size lower bounds for reaching an epsilon-NE with probability
/// 1-delta. The formulas assume stage rewards in [0,1]; values are returned as
/// doubles because realistic exploration constants make them astronomically
/// large (far beyond what experiments actually need).
inline SampleSizeResult theoretical_sample_sizes(const SampleSizeInput& in) {
    if (in.n < 1 || in.H < 1) throw std::invalid_argument("sample sizes: n, H must be >= 1");
    if (!(in.epsilon > 0.0 && in.epsilon <= 1.0))
        throw std::invalid_argument("sample sizes: epsilon must be in (0,1]");
    if (!(in.delta > 0.0 && in.delta < 1.0))
        throw std::invalid_argument("sample sizes: delta must be in (0,1)");
    if (!(in.c > 0.0 && in.c <= 1.0))
        throw std::invalid_argument("sample sizes: c must be in (0,1]");
    if (!(in.phi_range >= 0.0)) throw std::invalid_argument("sample sizes: phi_range must be >= 0");
    if (static_cast<int>(in.state_sizes.size()) != in.n ||
        static_cast<int>(in.action_sizes.size()) != in.n)
        throw std::invalid_argument("sample sizes: per-agent size lists must have length n");

    const double n = in.n;
    const double H = in.H;
    double sum_sa = 0.0, sum_s2a = 0.0, max_s = 0.0, max_a = 0.0;
    for (int i = 0; i < in.n; ++i) {
        const double S = in.state_sizes[i];
        const double A = in.action_sizes[i];
        if (S < 1 || A < 1) throw std::invalid_argument("sample sizes: space sizes must be >= 1");
        sum_sa += S * A;
        sum_s2a += S * S * A;
        max_s = std::max(max_s, S);
        max_a = std::max(max_a, A);
    }

    SampleSizeResult out;
    const double log_tg =
        std::log(8.0 * n * std::pow(H, 1.5) / (in.c * in.epsilon));
    const double tg_core = (in.phi_range + 1.0) / 2.0 + log_tg;
    out.T_G = std::ceil(64.0 * n * n * H * H * H * tg_core * tg_core /
                        (in.c * in.c * in.epsilon * in.epsilon));
    const double c4e2 = std::pow(in.c, 4) * in.epsilon * in.epsilon;
    out.T_J = std::ceil(2048.0 * n * n * std::pow(H, 4) *
                        std::log(8.0 * n * H * out.T_G * sum_sa / in.delta) / c4e2);
    out.T_K = std::ceil(2048.0 * n * n * max_s * max_s * max_a * max_a * std::pow(H, 6) *
                        std::log(8.0 * n * H * out.T_G * sum_s2a / in.delta) / c4e2);
    return out;
}

}  // namespace mpg
