#pragma once

#include "mpg/covering.hpp"
#include "mpg/poa.hpp"
#include "mpg/spi.hpp"
#include "mpg/tabular.hpp"

namespace mpg {

struct Preset {
    std::string name;
    std::string description;
    GameDefinition game;
    std::optional<CoveringConfig> covering;  // set for covering presets
    SpiConfig spi;                           // preset defaults, overridable by config
};

/// Single-agent one-step game with rewards 0.3/0.7; the smallest smoke
/// instance for the learning loop.
inline TabularGame make_g1() {
    TabularGame tab;
    tab.num_agents = 1;
    tab.horizon = 1;
    AgentSpace space;
    space.num_states = 1;
    space.num_actions = 2;
    tab.spaces = {space};
    tab.kernels = {TransitionKernel{}};
    tab.initial_dists = {{1.0}};
    tab.rewards = {{{{0.3, 0.7}}}};
    tab.welfare = {{{0.3, 0.7}}};
    tab.potential = tab.welfare;
    tab.reward_min = 0.0;
    tab.reward_max = 1.0;
    return tab;
}

inline CoveringConfig paper_7x7_config(RewardDesign design) {
    CoveringConfig config;
    config.grid_size = 7;
    config.num_agents = 3;
    config.horizon = 10;
    config.slip_prob = 1.0 / 3.0;
    config.coverage_radius = 1;
    config.design = design;
    for (auto [r, c] : {std::pair<int, int>{0, 0}, {0, 1}, {1, 0}, {0, 5}, {0, 6}, {1, 6},
                        {5, 0}, {6, 0}, {6, 1}})
        config.treasures.emplace_back(r, c, 1.0);
    return config;
}

inline CoveringConfig desk_5x5_config(RewardDesign design) {
    CoveringConfig config;
    config.grid_size = 5;
    config.num_agents = 2;
    config.horizon = 4;
    config.slip_prob = 1.0 / 3.0;
    config.coverage_radius = 1;
    config.design = design;
    for (auto [r, c] : {std::pair<int, int>{0, 0}, {0, 1}, {1, 0}, {4, 4}, {4, 3}, {3, 4}})
        config.treasures.emplace_back(r, c, 1.0);
    return config;
}

inline Preset make_preset(const std::string& name, RewardDesign design) {
    Preset preset;
    preset.name = name;
    if (name == "paper-7x7") {
        preset.description = "7x7 covering game, 3 agents, H=10, corner treasures";
        preset.covering = paper_7x7_config(design);
        preset.game = build_covering_game(*preset.covering);
        preset.spi.T_G = 40;
        preset.spi.T_J = 800;
        preset.spi.T_K = 50000;
        preset.spi.schedule = {StepsizeSchedule::Kind::InvSqrt, 0.5};
    } else if (name == "desk-5x5") {
        preset.description = "5x5 covering game, 2 agents, H=4, two treasure corners";
        preset.covering = desk_5x5_config(design);
        preset.game = build_covering_game(*preset.covering);
        preset.spi.T_G = 200;
        preset.spi.T_J = 500;
        preset.spi.T_K = 20000;
        preset.spi.use_exact_q = true;
        preset.spi.schedule = {StepsizeSchedule::Kind::InvSqrt, 0.5};
    } else if (name == "counterexample") {
        preset.description = "2-agent H=3 game whose Markov PoA is 7/16";
        preset.game = build_counterexample();
        preset.spi.T_G = 50;
        preset.spi.T_J = 200;
        preset.spi.T_K = 2000;
        preset.spi.use_exact_q = true;
    } else if (name == "micro-g1") {
        preset.description = "single-agent one-step smoke game";
        preset.game = to_game(make_g1());
        preset.spi.T_G = 50;
        preset.spi.T_J = 100;
        preset.spi.T_K = 100;
        preset.spi.use_exact_q = true;
    } else {
        throw std::invalid_argument("unknown preset '" + name + "'");
    }
    return preset;
}

inline std::vector<std::string> preset_names() {
    return {"paper-7x7", "desk-5x5", "counterexample", "micro-g1"};
}

}  // namespace mpg
