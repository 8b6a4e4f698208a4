#pragma once

#include <cmath>
#include <map>
#include <memory>

#include "mpg/game.hpp"

namespace mpg {

enum class RewardDesign { IdenticalInterest, MarginalContribution, UtilitySharing };

inline const char* to_string(RewardDesign d) {
    switch (d) {
        case RewardDesign::IdenticalInterest: return "ii";
        case RewardDesign::MarginalContribution: return "mc";
        case RewardDesign::UtilitySharing: return "us";
    }
    return "?";
}

inline RewardDesign reward_design_from_string(const std::string& s) {
    if (s == "ii" || s == "identical-interest") return RewardDesign::IdenticalInterest;
    if (s == "mc" || s == "marginal-contribution") return RewardDesign::MarginalContribution;
    if (s == "us" || s == "utility-sharing") return RewardDesign::UtilitySharing;
    throw std::invalid_argument("unknown reward design '" + s + "'");
}

struct CoveringConfig {
    int grid_size = 7;
    // (row, col) -> treasure value; all values >= 0, cells inside the grid.
    std::vector<std::tuple<int, int, double>> treasures;
    int num_agents = 3;
    int horizon = 10;
    int coverage_radius = 1;  // Chebyshev; 1 = 3x3 block
    double slip_prob = 1.0 / 3.0;
    RewardDesign design = RewardDesign::IdenticalInterest;
    // One probability vector per agent over the N*N cells; empty = uniform.
    std::vector<std::vector<double>> initial_dists;
};

constexpr int kUtilityFCap = 20;

/// f(m) = (m-1)! * sum_{i>=m} 1/i! / (e-1): the utility-sharing weight for a
/// cell covered by m agents. Summed as t_0 = 1/m, t_{k+1} = t_k/(m+k+1); all
/// terms positive so the sum is stable for every m (the forward recurrence
/// m*f(m) - 1/(e-1) amplifies rounding by (m-1)! and breaks down near m=18).
inline double utility_f(int m) {
    if (m < 1) throw std::invalid_argument("utility_f: m must be >= 1");
    if (m > kUtilityFCap)
        throw std::invalid_argument("utility_f: m exceeds the supported cap of " +
                                    std::to_string(kUtilityFCap));
    long double term = 1.0L / m;
    long double sum = term;
    for (int k = 1; term > 1e-22L * sum; ++k) {
        term /= static_cast<long double>(m + k);
        sum += term;
    }
    return static_cast<double>(sum / (std::exp(1.0L) - 1.0L));
}

/// Cells within Chebyshev radius r of pos, clipped to the grid.
inline std::vector<std::pair<int, int>> coverage_set(std::pair<int, int> pos,
                                                     const CoveringConfig& config) {
    const int N = config.grid_size;
    if (pos.first < 0 || pos.first >= N || pos.second < 0 || pos.second >= N)
        throw std::invalid_argument("coverage_set: position outside grid");
    std::vector<std::pair<int, int>> cells;
    const int r = config.coverage_radius;
    for (int dr = -r; dr <= r; ++dr)
        for (int dc = -r; dc <= r; ++dc) {
            const int row = pos.first + dr;
            const int col = pos.second + dc;
            if (row >= 0 && row < N && col >= 0 && col < N) cells.emplace_back(row, col);
        }
    return cells;
}

namespace detail {

// Precomputed per-cell coverage bitmasks and treasure list shared by the oracles.
struct CoveringTables {
    int grid_size = 0;
    int num_agents = 0;
    int words = 0;
    RewardDesign design = RewardDesign::IdenticalInterest;
    std::vector<std::vector<uint64_t>> cover;        // [cell][word]
    std::vector<std::pair<int, double>> treasures;   // (cell, value)
    std::vector<double> f_prefix;                    // f_prefix[m] = sum_{l=1..m} f(l)
    std::vector<double> f_value;                     // f_value[m] = f(m), m>=1

    bool covered(const std::vector<uint64_t>& mask, int cell) const {
        return (mask[cell >> 6] >> (cell & 63)) & 1ULL;
    }
    void accumulate(std::vector<uint64_t>& mask, int cell) const {
        for (int w = 0; w < words; ++w) mask[w] |= cover[cell][w];
    }
    int cover_count(const std::vector<int>& positions, int cell, int skip = -1) const {
        int count = 0;
        for (size_t i = 0; i < positions.size(); ++i) {
            if (static_cast<int>(i) == skip) continue;
            if (covered(cover[positions[i]], cell)) ++count;
        }
        return count;
    }
    double union_welfare(const std::vector<int>& positions, int skip = -1) const {
        thread_local std::vector<uint64_t> mask;
        mask.assign(words, 0);
        for (size_t i = 0; i < positions.size(); ++i) {
            if (static_cast<int>(i) == skip) continue;
            accumulate(mask, positions[i]);
        }
        double v = 0.0;
        for (const auto& [cell, value] : treasures)
            if (covered(mask, cell)) v += value;
        return v;
    }
};

inline void validate_covering_config(const CoveringConfig& config) {
    if (config.grid_size < 1) throw std::invalid_argument("covering: grid_size must be >= 1");
    if (config.num_agents < 1) throw std::invalid_argument("covering: num_agents must be >= 1");
    if (config.num_agents > kUtilityFCap)
        throw std::invalid_argument("covering: num_agents exceeds the utility_f cap");
    if (config.horizon < 1) throw std::invalid_argument("covering: horizon must be >= 1");
    if (config.coverage_radius < 0) throw std::invalid_argument("covering: radius must be >= 0");
    if (!(config.slip_prob >= 0.0 && config.slip_prob <= 1.0))
        throw std::invalid_argument("covering: slip_prob outside [0,1]");
    for (const auto& [row, col, value] : config.treasures) {
        if (row < 0 || row >= config.grid_size || col < 0 || col >= config.grid_size)
            throw std::invalid_argument("covering: treasure cell outside grid");
        if (value < 0.0) throw std::invalid_argument("covering: treasure value must be >= 0");
    }
    if (!config.initial_dists.empty() &&
        static_cast<int>(config.initial_dists.size()) != config.num_agents)
        throw std::invalid_argument("covering: initial distribution count mismatch");
}

inline std::shared_ptr<const CoveringTables> build_tables(const CoveringConfig& config) {
    auto tables = std::make_shared<CoveringTables>();
    const int N = config.grid_size;
    tables->grid_size = N;
    tables->num_agents = config.num_agents;
    tables->design = config.design;
    tables->words = (N * N + 63) / 64;
    tables->cover.assign(N * N, std::vector<uint64_t>(tables->words, 0));
    for (int row = 0; row < N; ++row)
        for (int col = 0; col < N; ++col) {
            auto& mask = tables->cover[row * N + col];
            for (auto [r, c] : coverage_set({row, col}, config)) {
                const int cell = r * N + c;
                mask[cell >> 6] |= 1ULL << (cell & 63);
            }
        }
    std::map<int, double> by_cell;
    for (const auto& [row, col, value] : config.treasures) by_cell[row * N + col] += value;
    for (const auto& [cell, value] : by_cell) tables->treasures.emplace_back(cell, value);
    tables->f_value.assign(config.num_agents + 1, 0.0);
    tables->f_prefix.assign(config.num_agents + 1, 0.0);
    for (int m = 1; m <= config.num_agents; ++m) {
        tables->f_value[m] = utility_f(m);
        tables->f_prefix[m] = tables->f_prefix[m - 1] + tables->f_value[m];
    }
    return tables;
}

}  // namespace detail

/// Treasure value covered by the union of the agents' coverage sets.
inline double stage_welfare(const std::vector<int>& positions, const CoveringConfig& config) {
    detail::validate_covering_config(config);
    return detail::build_tables(config)->union_welfare(positions);
}

/// Stage reward of one agent under the configured design. The marginal
/// contribution also equals the value of cells only this agent covers; debug
/// builds assert the two forms agree.
inline double stage_reward(int agent, const std::vector<int>& positions,
                           const detail::CoveringTables& tables) {
    switch (tables.design) {
        case RewardDesign::IdenticalInterest:
            return tables.union_welfare(positions);
        case RewardDesign::MarginalContribution: {
            const double value = tables.union_welfare(positions) -
                                 tables.union_welfare(positions, agent);
#ifndef NDEBUG
            double only = 0.0;
            for (const auto& [cell, w] : tables.treasures)
                if (tables.covered(tables.cover[positions[agent]], cell) &&
                    tables.cover_count(positions, cell, agent) == 0)
                    only += w;
            if (std::abs(only - value) > 1e-9) throw std::logic_error("MC forms disagree");
#endif
            return value;
        }
        case RewardDesign::UtilitySharing: {
            double value = 0.0;
            for (const auto& [cell, w] : tables.treasures)
                if (tables.covered(tables.cover[positions[agent]], cell))
                    value += w * tables.f_value[tables.cover_count(positions, cell)];
            return value;
        }
    }
    return 0.0;
}

inline double stage_reward(int agent, const std::vector<int>& positions,
                           const CoveringConfig& config) {
    detail::validate_covering_config(config);
    return stage_reward(agent, positions, *detail::build_tables(config));
}

/// Builds the full Markov game: N*N local states, actions {up,right,down,left},
/// slip kernel (intended move with probability 1-slip+slip/4, each other move
/// slip/4, off-grid moves keep the agent in place), design-dispatched rewards,
/// union welfare, and the matching stage potential.
inline GameDefinition build_covering_game(const CoveringConfig& config) {
    detail::validate_covering_config(config);
    auto tables = detail::build_tables(config);
    const int N = config.grid_size;
    const int S = N * N;

    GameDefinition game;
    game.num_agents = config.num_agents;
    game.horizon = config.horizon;
    game.rewards_depend_on_actions = false;
    game.reward_min = 0.0;
    double total_value = 0.0;
    for (const auto& [cell, value] : tables->treasures) total_value += value;
    game.reward_max = total_value;

    AgentSpace space;
    space.num_states = S;
    space.num_actions = 4;
    space.action_labels = {"up", "right", "down", "left"};
    game.spaces.assign(config.num_agents, space);

    // Executed-move targets; off-grid maps to staying still.
    auto target = [N](int cell, int move) {
        int row = cell / N, col = cell % N;
        switch (move) {
            case 0: row -= 1; break;  // up
            case 1: col += 1; break;  // right
            case 2: row += 1; break;  // down
            case 3: col -= 1; break;  // left
        }
        if (row < 0 || row >= N || col < 0 || col >= N) return cell;
        return row * N + col;
    };

    std::vector<std::vector<std::vector<double>>> stage(
        S, std::vector<std::vector<double>>(4, std::vector<double>(S, 0.0)));
    for (int s = 0; s < S; ++s) {
        for (int a = 0; a < 4; ++a) {
            auto& row = stage[s][a];
            // "a random action of the four" includes the chosen one, so the
            // intended move lands with probability 1-slip+slip/4.
            for (int move = 0; move < 4; ++move) {
                double p = config.slip_prob / 4.0;
                if (move == a) p += 1.0 - config.slip_prob;
                row[target(s, move)] += p;
            }
        }
    }
    TransitionKernel kernel;
    kernel.p.assign(config.horizon - 1, stage);
    game.kernels.assign(config.num_agents, kernel);

    if (config.initial_dists.empty()) {
        game.initial_dists.assign(config.num_agents,
                                  std::vector<double>(S, 1.0 / static_cast<double>(S)));
    } else {
        game.initial_dists = config.initial_dists;
    }

    game.reward = [tables](int agent, int /*h*/, const std::vector<int>& s,
                           const std::vector<int>& /*a*/) {
        return stage_reward(agent, s, *tables);
    };
    game.welfare = [tables](int /*h*/, const std::vector<int>& s, const std::vector<int>& /*a*/) {
        return tables->union_welfare(s);
    };
    if (config.design == RewardDesign::UtilitySharing) {
        game.potential = [tables](int /*h*/, const std::vector<int>& s,
                                  const std::vector<int>& /*a*/) {
            double phi = 0.0;
            for (const auto& [cell, w] : tables->treasures)
                phi += w * tables->f_prefix[tables->cover_count(s, cell)];
            return phi;
        };
    } else {
        game.potential = [tables](int /*h*/, const std::vector<int>& s,
                                  const std::vector<int>& /*a*/) {
            return tables->union_welfare(s);
        };
    }
    return game;
}

}  // namespace mpg
