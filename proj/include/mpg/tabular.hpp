#pragma once

#include <memory>

#include <nlohmann/json.hpp>

#include "mpg/game.hpp"

namespace mpg {

/// Dense game for tiny instances: rewards and welfare as full joint tensors.
/// Joint indices are mixed-radix with agent 0 as the most significant digit.
struct TabularGame {
    int num_agents = 0;
    int horizon = 0;
    std::vector<AgentSpace> spaces;
    std::vector<TransitionKernel> kernels;
    std::vector<std::vector<double>> initial_dists;
    // rewards[i][h-1][joint_s][joint_a]
    std::vector<std::vector<std::vector<std::vector<double>>>> rewards;
    // welfare[h-1][joint_s][joint_a]
    std::vector<std::vector<std::vector<double>>> welfare;
    // optional stage potential, same layout as welfare; empty when absent
    std::vector<std::vector<std::vector<double>>> potential;
    double reward_min = 0.0;
    double reward_max = 1.0;
};

inline GameDefinition to_game(TabularGame tab) {
    auto shared = std::make_shared<const TabularGame>(std::move(tab));
    GameDefinition game;
    game.num_agents = shared->num_agents;
    game.horizon = shared->horizon;
    game.spaces = shared->spaces;
    game.kernels = shared->kernels;
    game.initial_dists = shared->initial_dists;
    game.reward_min = shared->reward_min;
    game.reward_max = shared->reward_max;
    game.rewards_depend_on_actions = true;

    MixedRadix sr = game.state_radix();
    MixedRadix ar = game.action_radix();
    game.reward = [shared, sr, ar](int agent, int h, const std::vector<int>& s,
                                   const std::vector<int>& a) {
        return shared->rewards[agent][h - 1][sr.encode(s)][ar.encode(a)];
    };
    game.welfare = [shared, sr, ar](int h, const std::vector<int>& s, const std::vector<int>& a) {
        return shared->welfare[h - 1][sr.encode(s)][ar.encode(a)];
    };
    if (!shared->potential.empty()) {
        game.potential = [shared, sr, ar](int h, const std::vector<int>& s,
                                          const std::vector<int>& a) {
            return shared->potential[h - 1][sr.encode(s)][ar.encode(a)];
        };
    }
    return game;
}

inline nlohmann::json tabular_to_json(const TabularGame& tab) {
    nlohmann::json doc;
    doc["n"] = tab.num_agents;
    doc["H"] = tab.horizon;
    nlohmann::json agents = nlohmann::json::array();
    for (const auto& sp : tab.spaces) {
        nlohmann::json a;
        a["num_states"] = sp.num_states;
        a["num_actions"] = sp.num_actions;
        if (!sp.state_labels.empty()) a["state_labels"] = sp.state_labels;
        if (!sp.action_labels.empty()) a["action_labels"] = sp.action_labels;
        agents.push_back(a);
    }
    doc["agents"] = agents;
    nlohmann::json kernels = nlohmann::json::array();
    for (const auto& k : tab.kernels) kernels.push_back(k.p);
    doc["kernels"] = kernels;
    doc["initial_dists"] = tab.initial_dists;
    doc["rewards"] = tab.rewards;
    doc["welfare"] = tab.welfare;
    if (!tab.potential.empty()) doc["potential"] = tab.potential;
    doc["reward_range"] = {tab.reward_min, tab.reward_max};
    return doc;
}

inline TabularGame tabular_from_json(const nlohmann::json& doc) {
    static const std::vector<std::string> known = {"n",        "H",       "agents",
                                                   "kernels",  "initial_dists",
                                                   "rewards",  "welfare", "potential",
                                                   "reward_range"};
    for (auto it = doc.begin(); it != doc.end(); ++it) {
        bool ok = false;
        for (const auto& key : known) ok = ok || key == it.key();
        if (!ok) throw std::invalid_argument("tabular game: unknown key '" + it.key() + "'");
    }
    TabularGame tab;
    tab.num_agents = doc.at("n").get<int>();
    tab.horizon = doc.at("H").get<int>();
    for (const auto& a : doc.at("agents")) {
        AgentSpace sp;
        sp.num_states = a.at("num_states").get<int>();
        sp.num_actions = a.at("num_actions").get<int>();
        if (a.contains("state_labels")) sp.state_labels = a.at("state_labels").get<std::vector<std::string>>();
        if (a.contains("action_labels"))
            sp.action_labels = a.at("action_labels").get<std::vector<std::string>>();
        tab.spaces.push_back(sp);
    }
    for (const auto& k : doc.at("kernels")) {
        TransitionKernel kern;
        kern.p = k.get<std::vector<std::vector<std::vector<std::vector<double>>>>>();
        tab.kernels.push_back(std::move(kern));
    }
    tab.initial_dists = doc.at("initial_dists").get<std::vector<std::vector<double>>>();
    tab.rewards =
        doc.at("rewards").get<std::vector<std::vector<std::vector<std::vector<double>>>>>();
    tab.welfare = doc.at("welfare").get<std::vector<std::vector<std::vector<double>>>>();
    if (doc.contains("potential"))
        tab.potential = doc.at("potential").get<std::vector<std::vector<std::vector<double>>>>();
    if (doc.contains("reward_range")) {
        tab.reward_min = doc.at("reward_range").at(0).get<double>();
        tab.reward_max = doc.at("reward_range").at(1).get<double>();
    }
    return tab;
}

}  // namespace mpg
