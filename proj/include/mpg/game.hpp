#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace mpg {

/// Thrown when a dense enumeration would exceed the configured size cap.
class SizeCapError : public std::runtime_error {
public:
    explicit SizeCapError(const std::string& what) : std::runtime_error(what) {}
};

constexpr double kRowSumTol = 1e-12;

// Mixed-radix index over per-agent digits, agent 0 most significant.
// Used for joint state/action and strategy-profile enumeration.
struct MixedRadix {
    std::vector<int> sizes;
    long long total = 1;

    MixedRadix() = default;
    explicit MixedRadix(std::vector<int> s) : sizes(std::move(s)) {
        for (int v : sizes) {
            if (v < 1) throw std::invalid_argument("MixedRadix: size < 1");
            if (total > (1LL << 62) / v) throw std::overflow_error("MixedRadix: product overflow");
            total *= v;
        }
    }
    long long encode(const std::vector<int>& digits) const {
        long long idx = 0;
        for (size_t i = 0; i < sizes.size(); ++i) idx = idx * sizes[i] + digits[i];
        return idx;
    }
    void decode(long long idx, std::vector<int>& digits) const {
        digits.resize(sizes.size());
        for (size_t i = sizes.size(); i-- > 0;) {
            digits[i] = static_cast<int>(idx % sizes[i]);
            idx /= sizes[i];
        }
    }
};

struct AgentSpace {
    int num_states = 1;
    int num_actions = 1;
    std::vector<std::string> state_labels;   // optional; empty or size num_states
    std::vector<std::string> action_labels;  // optional
};

/// Local transition table P[h][s][a] -> row over s', for h in 1..H-1.
struct TransitionKernel {
    // p[h-1][s][a][s']
    std::vector<std::vector<std::vector<std::vector<double>>>> p;

    const std::vector<double>& row(int h, int s, int a) const { return p[h - 1][s][a]; }
    int horizons() const { return static_cast<int>(p.size()); }
};

/// r(agent, h, joint state, joint action). Must be pure and accept arbitrary
/// joint states, including counterfactual single-coordinate substitutions.
using RewardFn = std::function<double(int agent, int h, const std::vector<int>& s,
                                      const std::vector<int>& a)>;
using StageFn = std::function<double(int h, const std::vector<int>& s, const std::vector<int>& a)>;

struct GameDefinition {
    int num_agents = 0;
    int horizon = 0;
    std::vector<AgentSpace> spaces;
    std::vector<TransitionKernel> kernels;        // one per agent
    std::vector<std::vector<double>> initial_dists;
    RewardFn reward;
    StageFn welfare;
    StageFn potential;  // empty when the game carries no stage potential
    double reward_min = 0.0;
    double reward_max = 1.0;
    // When false, reward/welfare/potential ignore the joint action and
    // expectation enumerations may skip action products (exact, not approximate).
    bool rewards_depend_on_actions = true;

    bool has_potential() const { return static_cast<bool>(potential); }

    MixedRadix state_radix() const {
        std::vector<int> s(num_agents);
        for (int i = 0; i < num_agents; ++i) s[i] = spaces[i].num_states;
        return MixedRadix(s);
    }
    MixedRadix action_radix() const {
        std::vector<int> a(num_agents);
        for (int i = 0; i < num_agents; ++i) a[i] = spaces[i].num_actions;
        return MixedRadix(a);
    }
};

/// Row-stochastic policy of one agent: rows[h-1][s] is a distribution over actions.
struct LocalPolicy {
    std::vector<std::vector<std::vector<double>>> rows;  // [h-1][s][a]

    int horizons() const { return static_cast<int>(rows.size()); }
    const std::vector<double>& row(int h, int s) const { return rows[h - 1][s]; }
    std::vector<double>& row(int h, int s) { return rows[h - 1][s]; }
};

struct JointPolicy {
    std::vector<LocalPolicy> agents;

    int num_agents() const { return static_cast<int>(agents.size()); }
};

struct ValidationReport {
    std::vector<std::string> violations;

    bool ok() const { return violations.empty(); }
};

namespace detail {

inline bool is_distribution(const std::vector<double>& row, double tol, double* sum_out = nullptr) {
    double sum = 0.0;
    bool in_range = true;
    for (double v : row) {
        if (!(v >= 0.0 && v <= 1.0)) in_range = false;
        sum += v;
    }
    if (sum_out) *sum_out = sum;
    return in_range && std::abs(sum - 1.0) <= tol;
}

}  // namespace detail

inline ValidationReport validate_game(const GameDefinition& game) {
    ValidationReport report;
    auto fail = [&](const std::string& msg) { report.violations.push_back(msg); };

    if (game.num_agents < 1) fail("num_agents must be >= 1");
    if (game.horizon < 1) fail("horizon must be >= 1");
    if (static_cast<int>(game.spaces.size()) != game.num_agents) fail("spaces count != num_agents");
    if (static_cast<int>(game.kernels.size()) != game.num_agents) fail("kernels count != num_agents");
    if (static_cast<int>(game.initial_dists.size()) != game.num_agents)
        fail("initial distributions count != num_agents");
    if (!report.ok()) return report;

    for (int i = 0; i < game.num_agents; ++i) {
        const AgentSpace& sp = game.spaces[i];
        if (sp.num_states < 1) fail("agent " + std::to_string(i) + ": num_states < 1");
        if (sp.num_actions < 1) fail("agent " + std::to_string(i) + ": num_actions < 1");
        if (!sp.state_labels.empty() &&
            static_cast<int>(sp.state_labels.size()) != sp.num_states)
            fail("agent " + std::to_string(i) + ": state label count mismatch");
        if (!sp.action_labels.empty() &&
            static_cast<int>(sp.action_labels.size()) != sp.num_actions)
            fail("agent " + std::to_string(i) + ": action label count mismatch");

        double sum = 0.0;
        if (static_cast<int>(game.initial_dists[i].size()) != sp.num_states) {
            fail("agent " + std::to_string(i) + ": initial distribution length mismatch");
        } else if (!detail::is_distribution(game.initial_dists[i], kRowSumTol, &sum)) {
            fail("agent " + std::to_string(i) + ": initial distribution sum " +
                 std::to_string(sum));
        }

        const TransitionKernel& kern = game.kernels[i];
        if (kern.horizons() != game.horizon - 1) {
            fail("agent " + std::to_string(i) + ": kernel must cover horizons 1.." +
                 std::to_string(game.horizon - 1));
            continue;
        }
        for (int h = 1; h <= game.horizon - 1; ++h) {
            if (static_cast<int>(kern.p[h - 1].size()) != sp.num_states) {
                fail("agent " + std::to_string(i) + ", h=" + std::to_string(h) +
                     ": kernel state dimension mismatch");
                continue;
            }
            for (int s = 0; s < sp.num_states; ++s) {
                if (static_cast<int>(kern.p[h - 1][s].size()) != sp.num_actions) {
                    fail("agent " + std::to_string(i) + ", h=" + std::to_string(h) + ", s=" +
                         std::to_string(s) + ": kernel action dimension mismatch");
                    continue;
                }
                for (int a = 0; a < sp.num_actions; ++a) {
                    const auto& row = kern.p[h - 1][s][a];
                    double rs = 0.0;
                    if (static_cast<int>(row.size()) != sp.num_states ||
                        !detail::is_distribution(row, kRowSumTol, &rs)) {
                        fail("agent " + std::to_string(i) + ", h=" + std::to_string(h) +
                             ", s=" + std::to_string(s) + ", a=" + std::to_string(a) +
                             ": kernel row sum " + std::to_string(rs));
                    }
                }
            }
        }
    }
    if (!game.reward) fail("reward oracle missing");
    if (!game.welfare) fail("welfare oracle missing");
    if (!(game.reward_min <= game.reward_max)) fail("reward range empty");
    return report;
}

inline ValidationReport validate_policy(const GameDefinition& game, const JointPolicy& policy) {
    ValidationReport report;
    auto fail = [&](const std::string& msg) { report.violations.push_back(msg); };
    if (policy.num_agents() != game.num_agents) {
        fail("policy agent count mismatch");
        return report;
    }
    for (int i = 0; i < game.num_agents; ++i) {
        const LocalPolicy& lp = policy.agents[i];
        if (lp.horizons() != game.horizon) {
            fail("agent " + std::to_string(i) + ": policy horizon count mismatch");
            continue;
        }
        for (int h = 1; h <= game.horizon; ++h) {
            if (static_cast<int>(lp.rows[h - 1].size()) != game.spaces[i].num_states) {
                fail("agent " + std::to_string(i) + ", h=" + std::to_string(h) +
                     ": policy state dimension mismatch");
                continue;
            }
            for (int s = 0; s < game.spaces[i].num_states; ++s) {
                double rs = 0.0;
                if (static_cast<int>(lp.rows[h - 1][s].size()) != game.spaces[i].num_actions ||
                    !detail::is_distribution(lp.rows[h - 1][s], kRowSumTol, &rs)) {
                    fail("agent " + std::to_string(i) + ", h=" + std::to_string(h) + ", s=" +
                         std::to_string(s) + ": policy row sum " + std::to_string(rs));
                }
            }
        }
    }
    return report;
}

inline JointPolicy uniform_policy(const GameDefinition& game) {
    JointPolicy policy;
    policy.agents.resize(game.num_agents);
    for (int i = 0; i < game.num_agents; ++i) {
        const AgentSpace& sp = game.spaces[i];
        LocalPolicy lp;
        lp.rows.assign(game.horizon,
                       std::vector<std::vector<double>>(
                           sp.num_states, std::vector<double>(sp.num_actions,
                                                              1.0 / sp.num_actions)));
        policy.agents[i] = std::move(lp);
    }
    return policy;
}

/// max over states of the L1 distance between action rows at horizon h.
inline double policy_l1_distance(const LocalPolicy& p, const LocalPolicy& q, int h) {
    if (p.horizons() != q.horizons() || h < 1 || h > p.horizons())
        throw std::invalid_argument("policy_l1_distance: shape mismatch");
    const auto& pr = p.rows[h - 1];
    const auto& qr = q.rows[h - 1];
    if (pr.size() != qr.size()) throw std::invalid_argument("policy_l1_distance: shape mismatch");
    double worst = 0.0;
    for (size_t s = 0; s < pr.size(); ++s) {
        if (pr[s].size() != qr[s].size())
            throw std::invalid_argument("policy_l1_distance: shape mismatch");
        double sum = 0.0;
        for (size_t a = 0; a < pr[s].size(); ++a) sum += std::abs(pr[s][a] - qr[s][a]);
        worst = std::max(worst, sum);
    }
    return worst;
}

/// Convex combination (1-eta)*base + eta*target, row by row.
inline LocalPolicy mix_policies(const LocalPolicy& base, const LocalPolicy& target, double eta) {
    if (!(eta >= 0.0 && eta <= 1.0)) throw std::invalid_argument("mix_policies: eta outside [0,1]");
    if (base.horizons() != target.horizons())
        throw std::invalid_argument("mix_policies: shape mismatch");
    LocalPolicy out = base;
    for (int h = 0; h < base.horizons(); ++h) {
        if (base.rows[h].size() != target.rows[h].size())
            throw std::invalid_argument("mix_policies: shape mismatch");
        for (size_t s = 0; s < base.rows[h].size(); ++s) {
            if (base.rows[h][s].size() != target.rows[h][s].size())
                throw std::invalid_argument("mix_policies: shape mismatch");
            for (size_t a = 0; a < base.rows[h][s].size(); ++a)
                out.rows[h][s][a] = (1.0 - eta) * base.rows[h][s][a] + eta * target.rows[h][s][a];
        }
    }
    return out;
}

}  // namespace mpg
