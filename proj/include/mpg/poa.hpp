#pragma once

#include <array>

#include "mpg/exact_eval.hpp"
#include "mpg/game.hpp"

namespace mpg {

/// One horizon's rewards and welfare over joint strategy profiles. For a
/// Markov game at horizon h a player's strategy is its (state, action) pair.
struct StageGame {
    int players = 0;
    std::vector<int> strategy_counts;
    MixedRadix radix;
    std::vector<std::vector<double>> rewards;  // [player][profile]
    std::vector<double> welfare;               // [profile]
};

constexpr double kSmoothTol = 1e-9;

inline StageGame make_stage_game(std::vector<int> strategy_counts,
                                 std::vector<std::vector<double>> rewards,
                                 std::vector<double> welfare) {
    StageGame stage;
    stage.players = static_cast<int>(strategy_counts.size());
    stage.strategy_counts = std::move(strategy_counts);
    stage.radix = MixedRadix(stage.strategy_counts);
    stage.rewards = std::move(rewards);
    stage.welfare = std::move(welfare);
    for (const auto& r : stage.rewards)
        if (static_cast<long long>(r.size()) != stage.radix.total)
            throw std::invalid_argument("stage game: reward table size mismatch");
    if (static_cast<long long>(stage.welfare.size()) != stage.radix.total)
        throw std::invalid_argument("stage game: welfare table size mismatch");
    return stage;
}

/// 2-player 2-strategy identical-interest game (payoff table = welfare).
inline StageGame identical_interest_2x2(const std::array<std::array<double, 2>, 2>& table) {
    std::vector<double> flat = {table[0][0], table[0][1], table[1][0], table[1][1]};
    return make_stage_game({2, 2}, {flat, flat}, flat);
}

struct SmoothnessCertificate {
    double lambda = 1.0;
    double mu = 0.0;
    double poa_lower = std::numeric_limits<double>::quiet_NaN();
    bool certified = false;
    // Violating (profile, deviation-profile) pair and the horizon it occurred
    // at (0 for plain stage games); lexicographically first.
    std::optional<std::array<long long, 3>> witness;
};

inline StageGame stage_game_from_markov(const GameDefinition& game, int h,
                                        long long cap = kDefaultEnumCap) {
    if (h < 1 || h > game.horizon) throw std::invalid_argument("stage_game_from_markov: bad h");
    std::vector<int> counts(game.num_agents);
    double product = 1.0;
    for (int i = 0; i < game.num_agents; ++i) {
        counts[i] = game.spaces[i].num_states * game.spaces[i].num_actions;
        product *= counts[i];
    }
    detail::check_cap(product, cap, "stage_game_from_markov");

    StageGame stage;
    stage.players = game.num_agents;
    stage.strategy_counts = counts;
    stage.radix = MixedRadix(counts);
    stage.rewards.assign(game.num_agents, std::vector<double>(stage.radix.total, 0.0));
    stage.welfare.assign(stage.radix.total, 0.0);

    std::vector<int> digits, s(game.num_agents), a(game.num_agents);
    for (long long idx = 0; idx < stage.radix.total; ++idx) {
        stage.radix.decode(idx, digits);
        for (int i = 0; i < game.num_agents; ++i) {
            s[i] = digits[i] / game.spaces[i].num_actions;
            a[i] = digits[i] % game.spaces[i].num_actions;
        }
        for (int i = 0; i < game.num_agents; ++i) stage.rewards[i][idx] = game.reward(i, h, s, a);
        stage.welfare[idx] = game.welfare(h, s, a);
    }
    return stage;
}

namespace detail {

// Deviation sum sum_i [r_i(x) - r_i(x with player i's strategy from x*)],
// with per-player index strides so a deviation is one index adjustment.
struct ProfileScan {
    std::vector<long long> strides;
    std::vector<std::vector<int>> digits;

    explicit ProfileScan(const StageGame& stage) {
        strides.assign(stage.players, 1);
        for (int i = stage.players - 2; i >= 0; --i)
            strides[i] = strides[i + 1] * stage.strategy_counts[i + 1];
        digits = decode_all(stage.radix);
    }
    double deviation_sum(const StageGame& stage, long long x, long long xs) const {
        double lhs = 0.0;
        for (int i = 0; i < stage.players; ++i) {
            const long long dev = x + (digits[xs][i] - digits[x][i]) * strides[i];
            lhs += stage.rewards[i][x] - stage.rewards[i][dev];
        }
        return lhs;
    }
};

}  // namespace detail

/// Exhaustive check of the per-horizon smoothness inequality over all ordered
/// profile pairs.
inline SmoothnessCertificate check_smoothness(const StageGame& stage, double lambda, double mu) {
    if (!(lambda > 0.0) || !(mu >= 0.0))
        throw std::invalid_argument("check_smoothness: need lambda > 0, mu >= 0");
    detail::ProfileScan scan(stage);
    SmoothnessCertificate cert;
    cert.lambda = lambda;
    cert.mu = mu;
    cert.certified = true;
    const long long P = stage.radix.total;
    for (long long x = 0; x < P && cert.certified; ++x) {
        for (long long xs = 0; xs < P; ++xs) {
            const double lhs = scan.deviation_sum(stage, x, xs);
            const double rhs = (1.0 + mu) * stage.welfare[x] - lambda * stage.welfare[xs];
            if (lhs > rhs + kSmoothTol) {
                cert.certified = false;
                cert.witness = {x, xs, 0};
                break;
            }
        }
    }
    if (cert.certified) cert.poa_lower = lambda / (1.0 + mu);
    return cert;
}

/// Markov-game smoothness: every horizon's stage game must satisfy the
/// inequality; certificates merge by conjunction, first witness kept.
inline SmoothnessCertificate check_smoothness(const GameDefinition& game, double lambda, double mu,
                                              long long cap = kDefaultEnumCap) {
    SmoothnessCertificate merged;
    merged.lambda = lambda;
    merged.mu = mu;
    merged.certified = true;
    for (int h = 1; h <= game.horizon; ++h) {
        StageGame stage = stage_game_from_markov(game, h, cap);
        SmoothnessCertificate cert = check_smoothness(stage, lambda, mu);
        if (!cert.certified) {
            merged.certified = false;
            merged.witness = {(*cert.witness)[0], (*cert.witness)[1], static_cast<long long>(h)};
            break;
        }
    }
    if (merged.certified) merged.poa_lower = lambda / (1.0 + mu);
    return merged;
}

struct MuSearchResult {
    bool feasible = false;
    double mu = std::numeric_limits<double>::quiet_NaN();
    SmoothnessCertificate certificate;
    // Binding pair for the returned mu, or the infeasible pair when v(x)=0
    // makes the constraint unsatisfiable for this lambda.
    std::optional<std::array<long long, 3>> binding;
};

/// Smallest mu >= 0 such that (lambda, mu) certifies. Pairs with v(x) = 0 are
/// mu-independent feasibility constraints on lambda.
inline MuSearchResult min_mu_for_lambda(const StageGame& stage, double lambda) {
    if (!(lambda > 0.0)) throw std::invalid_argument("min_mu_for_lambda: lambda must be > 0");
    detail::ProfileScan scan(stage);
    MuSearchResult result;
    result.feasible = true;
    double mu = 0.0;
    std::optional<std::array<long long, 3>> binding;
    const long long P = stage.radix.total;
    for (long long x = 0; x < P; ++x) {
        for (long long xs = 0; xs < P; ++xs) {
            const double lhs = scan.deviation_sum(stage, x, xs);
            const double slack = lhs - stage.welfare[x] + lambda * stage.welfare[xs];
            if (stage.welfare[x] > 1e-12) {
                const double req = slack / stage.welfare[x];
                if (req > mu) {
                    mu = req;
                    binding = {x, xs, 0};
                }
            } else if (slack > kSmoothTol) {
                result.feasible = false;
                result.binding = {x, xs, 0};
                return result;
            }
        }
    }
    result.mu = mu;
    result.binding = binding;
    result.certificate = check_smoothness(stage, lambda, mu);
    return result;
}

inline double poa_lower_bound(const SmoothnessCertificate& cert) {
    if (!cert.certified) throw std::invalid_argument("poa_lower_bound: certificate not certified");
    return cert.lambda / (1.0 + cert.mu);
}

/// Expected welfare of a mixed profile (per-player strategy distributions).
inline double stage_mixed_welfare(const StageGame& stage,
                                  const std::vector<std::vector<double>>& mixed) {
    std::vector<int> digits;
    double total = 0.0;
    for (long long idx = 0; idx < stage.radix.total; ++idx) {
        stage.radix.decode(idx, digits);
        double w = 1.0;
        for (int i = 0; i < stage.players; ++i) w *= mixed[i][digits[i]];
        if (w != 0.0) total += w * stage.welfare[idx];
    }
    return total;
}

/// Total best-response gap of a mixed profile in a one-shot stage game.
inline double stage_ne_gap(const StageGame& stage, const std::vector<std::vector<double>>& mixed) {
    std::vector<int> digits;
    double total_gap = 0.0;
    for (int i = 0; i < stage.players; ++i) {
        std::vector<double> payoff(stage.strategy_counts[i], 0.0);
        for (long long idx = 0; idx < stage.radix.total; ++idx) {
            stage.radix.decode(idx, digits);
            double w = 1.0;
            for (int j = 0; j < stage.players; ++j)
                if (j != i) w *= mixed[j][digits[j]];
            if (w != 0.0) payoff[digits[i]] += w * stage.rewards[i][idx];
        }
        double current = 0.0, best = -std::numeric_limits<double>::infinity();
        for (int k = 0; k < stage.strategy_counts[i]; ++k) {
            current += mixed[i][k] * payoff[k];
            best = std::max(best, payoff[k]);
        }
        total_gap += best - current;
    }
    return total_gap;
}

struct NeRecord {
    std::vector<std::vector<double>> strategy;  // per-player distribution
    double welfare = 0.0;
    double gap = 0.0;  // re-checked best-response gap
    bool pure = false;
};

struct NeSet2x2 {
    std::vector<NeRecord> nes;
    double worst_welfare = std::numeric_limits<double>::quiet_NaN();
    double optimum = std::numeric_limits<double>::quiet_NaN();
    double poa = std::numeric_limits<double>::quiet_NaN();
    bool continuum = false;
};

/// Pure NEs by best-response check plus the fully-mixed NE from the
/// indifference conditions; degenerate indifference against a pure opponent is
/// reported as a continuum with its endpoint profiles listed.
inline NeSet2x2 analyze_2x2(const StageGame& stage) {
    if (stage.players != 2 || stage.strategy_counts != std::vector<int>{2, 2})
        throw std::invalid_argument("analyze_2x2: need a 2-player 2-strategy game");
    constexpr double kTol = 1e-12;
    const auto r = [&](int player, int s0, int s1) {
        return stage.rewards[player][s0 * 2 + s1];
    };
    NeSet2x2 out;
    auto add = [&](std::vector<std::vector<double>> mixed, bool pure) {
        NeRecord rec;
        rec.welfare = stage_mixed_welfare(stage, mixed);
        rec.gap = stage_ne_gap(stage, mixed);
        rec.strategy = std::move(mixed);
        rec.pure = pure;
        out.nes.push_back(std::move(rec));
    };

    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b)
            if (r(0, a, b) >= r(0, 1 - a, b) - kTol && r(1, a, b) >= r(1, a, 1 - b) - kTol)
                add({{a == 0 ? 1.0 : 0.0, a == 0 ? 0.0 : 1.0},
                     {b == 0 ? 1.0 : 0.0, b == 0 ? 0.0 : 1.0}},
                    true);

    // Fully mixed: p = P(player 1 plays 0) from player 2's indifference, q
    // symmetric.
    const double d2 = r(1, 0, 0) - r(1, 0, 1) - r(1, 1, 0) + r(1, 1, 1);
    const double d1 = r(0, 0, 0) - r(0, 1, 0) - r(0, 0, 1) + r(0, 1, 1);
    if (std::abs(d2) > kTol && std::abs(d1) > kTol) {
        const double p = (r(1, 1, 1) - r(1, 1, 0)) / d2;
        const double q = (r(0, 1, 1) - r(0, 0, 1)) / d1;
        if (p > kTol && p < 1.0 - kTol && q > kTol && q < 1.0 - kTol)
            add({{p, 1.0 - p}, {q, 1.0 - q}}, false);
    }

    // Degenerate indifference against a pure strategy: a segment of NEs.
    for (int a = 0; a < 2; ++a) {
        if (std::abs(r(1, a, 0) - r(1, a, 1)) <= kTol) {
            // player 2 indifferent vs pure a; find q-interval where a stays a BR
            const double c0 = r(0, a, 0) - r(0, 1 - a, 0);
            const double c1 = r(0, a, 1) - r(0, 1 - a, 1);
            // BR condition: q*c0 + (1-q)*c1 >= 0 over q in [0,1]
            double lo = 0.0, hi = 1.0;
            if (std::abs(c0 - c1) > kTol) {
                const double root = -c1 / (c0 - c1);
                if (c0 - c1 > 0) lo = std::max(lo, root);
                else hi = std::min(hi, root);
            } else if (c1 < -kTol) {
                continue;
            }
            if (hi - lo > kTol) {
                out.continuum = true;
                for (double q : {lo, hi})
                    add({{a == 0 ? 1.0 : 0.0, a == 0 ? 0.0 : 1.0}, {q, 1.0 - q}}, false);
            }
        }
        if (std::abs(r(0, 0, a) - r(0, 1, a)) <= kTol) {
            const double c0 = r(1, 0, a) - r(1, 0, 1 - a);
            const double c1 = r(1, 1, a) - r(1, 1, 1 - a);
            double lo = 0.0, hi = 1.0;
            if (std::abs(c0 - c1) > kTol) {
                const double root = -c1 / (c0 - c1);
                if (c0 - c1 > 0) lo = std::max(lo, root);
                else hi = std::min(hi, root);
            } else if (c1 < -kTol) {
                continue;
            }
            if (hi - lo > kTol) {
                out.continuum = true;
                for (double p : {lo, hi})
                    add({{p, 1.0 - p}, {a == 0 ? 1.0 : 0.0, a == 0 ? 0.0 : 1.0}}, false);
            }
        }
    }

    out.optimum = -std::numeric_limits<double>::infinity();
    for (double v : stage.welfare) out.optimum = std::max(out.optimum, v);
    out.worst_welfare = std::numeric_limits<double>::infinity();
    for (const auto& rec : out.nes) out.worst_welfare = std::min(out.worst_welfare, rec.welfare);
    if (!out.nes.empty() && out.optimum > 0.0) out.poa = out.worst_welfare / out.optimum;
    return out;
}

/// The 2-agent, H=3 game whose stage games all have PoA >= 1/2 while the
/// Markov game's PoA is 7/16: deterministic first-step transitions init->X or
/// init->Y, absorbing afterwards, state-only rewards (zero, then the
/// coordination table, then the anti-coordination table), shared welfare.
inline GameDefinition build_counterexample() {
    constexpr double kT2[2][2] = {{2.0, 0.0}, {0.0, 2.0}};
    constexpr double kT3[2][2] = {{0.0, 1.0}, {1.0, 2.0}};

    GameDefinition game;
    game.num_agents = 2;
    game.horizon = 3;
    AgentSpace space;
    space.num_states = 3;
    space.num_actions = 2;
    space.state_labels = {"init", "X", "Y"};
    space.action_labels = {"A", "B"};
    game.spaces = {space, space};

    TransitionKernel kernel;
    kernel.p.assign(2, std::vector<std::vector<std::vector<double>>>(
                           3, std::vector<std::vector<double>>(2, std::vector<double>(3, 0.0))));
    // h=1: init moves by action; X and Y absorb.
    kernel.p[0][0][0][1] = 1.0;  // init, A -> X
    kernel.p[0][0][1][2] = 1.0;  // init, B -> Y
    for (int a = 0; a < 2; ++a) {
        kernel.p[0][1][a][1] = 1.0;
        kernel.p[0][2][a][2] = 1.0;
    }
    // h=2: everything absorbs.
    for (int s = 0; s < 3; ++s)
        for (int a = 0; a < 2; ++a) kernel.p[1][s][a][s] = 1.0;
    game.kernels = {kernel, kernel};
    game.initial_dists = {{1.0, 0.0, 0.0}, {1.0, 0.0, 0.0}};

    auto stage_value = [kT2, kT3](int h, const std::vector<int>& s) {
        if (h == 1 || s[0] == 0 || s[1] == 0) return 0.0;
        return h == 2 ? kT2[s[0] - 1][s[1] - 1] : kT3[s[0] - 1][s[1] - 1];
    };
    game.reward = [stage_value](int /*agent*/, int h, const std::vector<int>& s,
                                const std::vector<int>& /*a*/) { return stage_value(h, s); };
    game.welfare = [stage_value](int h, const std::vector<int>& s,
                                 const std::vector<int>& /*a*/) { return stage_value(h, s); };
    game.potential = game.welfare;  // identical interest
    game.reward_min = 0.0;
    game.reward_max = 2.0;
    game.rewards_depend_on_actions = false;
    return game;
}

/// Collapses a Markov game whose behavior after h=1 is action-irrelevant into
/// the normal-form game over first-step joint actions, with J_i as payoffs.
/// Requires point-mass initial distributions.
inline StageGame reduce_to_normal_form(const GameDefinition& game,
                                       long long cap = kDefaultEnumCap) {
    for (int i = 0; i < game.num_agents; ++i) {
        double mx = 0.0;
        for (double v : game.initial_dists[i]) mx = std::max(mx, v);
        if (std::abs(mx - 1.0) > 1e-12)
            throw std::invalid_argument(
                "reduce_to_normal_form: initial distributions must be point masses");
    }
    for (int i = 0; i < game.num_agents; ++i)
        for (int h = 2; h <= game.horizon - 1; ++h)
            for (int s = 0; s < game.spaces[i].num_states; ++s)
                for (int a = 1; a < game.spaces[i].num_actions; ++a) {
                    const auto& base = game.kernels[i].row(h, s, 0);
                    const auto& row = game.kernels[i].row(h, s, a);
                    for (size_t sn = 0; sn < base.size(); ++sn)
                        if (std::abs(base[sn] - row[sn]) > 1e-12)
                            throw std::invalid_argument(
                                "reduce_to_normal_form: kernel depends on actions after h=1");
                }
    if (game.rewards_depend_on_actions && game.horizon > 1) {
        MixedRadix sr = game.state_radix();
        MixedRadix ar = game.action_radix();
        detail::check_cap(static_cast<double>(sr.total) * static_cast<double>(ar.total), cap,
                          "reduce_to_normal_form");
        std::vector<int> s, a, a0;
        for (int h = 2; h <= game.horizon; ++h)
            for (long long sj = 0; sj < sr.total; ++sj) {
                sr.decode(sj, s);
                ar.decode(0, a0);
                for (long long aj = 1; aj < ar.total; ++aj) {
                    ar.decode(aj, a);
                    for (int i = 0; i < game.num_agents; ++i)
                        if (std::abs(game.reward(i, h, s, a) - game.reward(i, h, s, a0)) > 1e-12)
                            throw std::invalid_argument(
                                "reduce_to_normal_form: rewards depend on actions after h=1");
                }
            }
    }

    std::vector<int> counts(game.num_agents);
    for (int i = 0; i < game.num_agents; ++i) counts[i] = game.spaces[i].num_actions;
    MixedRadix ar(counts);

    StageGame stage;
    stage.players = game.num_agents;
    stage.strategy_counts = counts;
    stage.radix = ar;
    stage.rewards.assign(game.num_agents, std::vector<double>(ar.total, 0.0));
    stage.welfare.assign(ar.total, 0.0);

    std::vector<int> actions;
    for (long long idx = 0; idx < ar.total; ++idx) {
        ar.decode(idx, actions);
        JointPolicy policy = uniform_policy(game);
        for (int i = 0; i < game.num_agents; ++i)
            for (int s = 0; s < game.spaces[i].num_states; ++s) {
                auto& row = policy.agents[i].rows[0][s];
                row.assign(row.size(), 0.0);
                row[actions[i]] = 1.0;
            }
        EvaluationReport rep = expected_return(game, policy, cap);
        for (int i = 0; i < game.num_agents; ++i) stage.rewards[i][idx] = rep.J[i];
        stage.welfare[idx] = rep.W;
    }
    return stage;
}

}  // namespace mpg
