#pragma once

#include <fstream>

#include <nlohmann/json.hpp>

#include "mpg/presets.hpp"

namespace mpg {

constexpr uint64_t kDefaultSeed = 17;

enum class ExperimentKind { Simulate, AnalyzeSmoothness, Counterexample, EvalPolicy, SampleSizes };

inline const char* to_string(ExperimentKind kind) {
    switch (kind) {
        case ExperimentKind::Simulate: return "simulate";
        case ExperimentKind::AnalyzeSmoothness: return "analyze-smoothness";
        case ExperimentKind::Counterexample: return "counterexample";
        case ExperimentKind::EvalPolicy: return "eval-policy";
        case ExperimentKind::SampleSizes: return "sample-sizes";
    }
    return "?";
}

inline ExperimentKind experiment_kind_from_string(const std::string& s) {
    if (s == "simulate") return ExperimentKind::Simulate;
    if (s == "analyze-smoothness") return ExperimentKind::AnalyzeSmoothness;
    if (s == "counterexample") return ExperimentKind::Counterexample;
    if (s == "eval-policy") return ExperimentKind::EvalPolicy;
    if (s == "sample-sizes") return ExperimentKind::SampleSizes;
    throw std::invalid_argument("unknown experiment kind '" + s + "'");
}

struct AnalyzerConfig {
    std::vector<double> lambda_grid = {1.0};
    bool mu_search = true;
    std::optional<double> mu;  // fixed mu when mu_search is off
};

struct EvalConfig {
    std::string policy_path;      // empty = uniform policy
    bool allow_mc = false;        // Monte-Carlo fallback past the enumeration cap
    long long mc_episodes = 10000;
};

struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::Simulate;
    uint64_t seed = kDefaultSeed;
    std::string out_dir = "out";
    int threads = 1;

    // exactly one game source
    std::string preset;
    std::optional<CoveringConfig> covering;
    std::string tabular_path;
    std::string builtin;  // "counterexample" | "micro-g1"

    GameDefinition game;
    SpiConfig spi;
    AnalyzerConfig analyzer;
    EvalConfig eval;
    SampleSizeInput sizes;

    nlohmann::json echo;  // fully-resolved configuration
};

namespace detail {

inline void reject_unknown_keys(const nlohmann::json& obj, std::vector<std::string> known,
                                const std::string& where) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool ok = false;
        for (const auto& k : known) ok = ok || k == it.key();
        if (!ok)
            throw std::invalid_argument("config: unknown key '" + it.key() + "' in " + where);
    }
}

inline CoveringConfig covering_from_json(const nlohmann::json& doc) {
    reject_unknown_keys(doc,
                        {"grid_size", "treasures", "num_agents", "horizon", "coverage_radius",
                         "slip_prob", "reward_design", "initial"},
                        "game.covering");
    CoveringConfig config;
    config.grid_size = doc.at("grid_size").get<int>();
    config.num_agents = doc.at("num_agents").get<int>();
    config.horizon = doc.at("horizon").get<int>();
    if (doc.contains("coverage_radius")) config.coverage_radius = doc.at("coverage_radius").get<int>();
    if (doc.contains("slip_prob")) config.slip_prob = doc.at("slip_prob").get<double>();
    config.design = reward_design_from_string(doc.value("reward_design", std::string("ii")));
    for (const auto& t : doc.at("treasures"))
        config.treasures.emplace_back(t.at(0).get<int>(), t.at(1).get<int>(), t.at(2).get<double>());
    if (doc.contains("initial") && doc.at("initial").is_array())
        config.initial_dists = doc.at("initial").get<std::vector<std::vector<double>>>();
    return config;
}

inline nlohmann::json covering_to_json(const CoveringConfig& config) {
    nlohmann::json doc;
    doc["grid_size"] = config.grid_size;
    doc["num_agents"] = config.num_agents;
    doc["horizon"] = config.horizon;
    doc["coverage_radius"] = config.coverage_radius;
    doc["slip_prob"] = config.slip_prob;
    doc["reward_design"] = to_string(config.design);
    nlohmann::json treasures = nlohmann::json::array();
    for (const auto& [r, c, v] : config.treasures) treasures.push_back({r, c, v});
    doc["treasures"] = treasures;
    if (config.initial_dists.empty()) doc["initial"] = "uniform";
    else doc["initial"] = config.initial_dists;
    return doc;
}

inline StepsizeSchedule schedule_from_json(const nlohmann::json& doc) {
    reject_unknown_keys(doc, {"kind", "value"}, "spi.stepsize");
    StepsizeSchedule schedule;
    const std::string kind = doc.at("kind").get<std::string>();
    if (kind == "theory") {
        schedule.kind = StepsizeSchedule::Kind::Theory;
    } else if (kind == "constant") {
        schedule.kind = StepsizeSchedule::Kind::Constant;
        schedule.value = doc.at("value").get<double>();
    } else if (kind == "inv-sqrt") {
        schedule.kind = StepsizeSchedule::Kind::InvSqrt;
        schedule.value = doc.at("value").get<double>();
    } else {
        throw std::invalid_argument("config: unknown stepsize kind '" + kind + "'");
    }
    return schedule;
}

inline nlohmann::json schedule_to_json(const StepsizeSchedule& schedule) {
    nlohmann::json doc;
    switch (schedule.kind) {
        case StepsizeSchedule::Kind::Theory: doc["kind"] = "theory"; break;
        case StepsizeSchedule::Kind::Constant:
            doc["kind"] = "constant";
            doc["value"] = schedule.value;
            break;
        case StepsizeSchedule::Kind::InvSqrt:
            doc["kind"] = "inv-sqrt";
            doc["value"] = schedule.value;
            break;
    }
    return doc;
}

inline void apply_spi_json(const nlohmann::json& doc, SpiConfig& spi) {
    reject_unknown_keys(doc,
                        {"T_G", "T_J", "T_K", "use_exact_q", "exact_eval_logging",
                         "per_agent_rollouts", "stepsize", "enum_cap", "debug_checks"},
                        "spi");
    if (doc.contains("T_G")) spi.T_G = doc.at("T_G").get<long long>();
    if (doc.contains("T_J")) spi.T_J = doc.at("T_J").get<long long>();
    if (doc.contains("T_K")) spi.T_K = doc.at("T_K").get<long long>();
    if (doc.contains("use_exact_q")) spi.use_exact_q = doc.at("use_exact_q").get<bool>();
    if (doc.contains("exact_eval_logging"))
        spi.exact_eval_logging = doc.at("exact_eval_logging").get<bool>();
    if (doc.contains("per_agent_rollouts"))
        spi.per_agent_rollouts = doc.at("per_agent_rollouts").get<bool>();
    if (doc.contains("stepsize")) spi.schedule = schedule_from_json(doc.at("stepsize"));
    if (doc.contains("enum_cap")) spi.enum_cap = doc.at("enum_cap").get<long long>();
    if (doc.contains("debug_checks")) spi.debug_checks = doc.at("debug_checks").get<bool>();
}

inline SampleSizeInput sizes_from_json(const nlohmann::json& doc) {
    reject_unknown_keys(
        doc, {"n", "H", "state_sizes", "action_sizes", "phi_range", "c", "epsilon", "delta"},
        "sizes");
    SampleSizeInput in;
    in.n = doc.at("n").get<int>();
    in.H = doc.at("H").get<int>();
    in.state_sizes = doc.at("state_sizes").get<std::vector<int>>();
    in.action_sizes = doc.at("action_sizes").get<std::vector<int>>();
    in.phi_range = doc.at("phi_range").get<double>();
    in.c = doc.at("c").get<double>();
    in.epsilon = doc.at("epsilon").get<double>();
    in.delta = doc.at("delta").get<double>();
    return in;
}

}  // namespace detail

/// Parses and fully resolves an experiment document: defaults applied, preset
/// defaults merged, unknown keys rejected, and the resolved form echoed.
inline ExperimentConfig parse_config(const nlohmann::json& doc) {
    detail::reject_unknown_keys(
        doc, {"experiment", "seed", "out_dir", "threads", "game", "spi", "analyzer", "eval",
              "sizes"},
        "top level");
    ExperimentConfig config;
    config.kind = experiment_kind_from_string(doc.at("experiment").get<std::string>());
    if (doc.contains("seed")) config.seed = doc.at("seed").get<uint64_t>();
    if (doc.contains("out_dir")) config.out_dir = doc.at("out_dir").get<std::string>();
    if (doc.contains("threads")) config.threads = doc.at("threads").get<int>();

    nlohmann::json game_echo;
    if (config.kind != ExperimentKind::Counterexample &&
        config.kind != ExperimentKind::SampleSizes) {
        if (!doc.contains("game")) throw std::invalid_argument("config: missing game section");
        const nlohmann::json& g = doc.at("game");
        detail::reject_unknown_keys(g, {"preset", "covering", "tabular_path", "builtin",
                                        "reward_design"},
                                    "game");
        int sources = 0;
        sources += g.contains("preset") ? 1 : 0;
        sources += g.contains("covering") ? 1 : 0;
        sources += g.contains("tabular_path") ? 1 : 0;
        sources += g.contains("builtin") ? 1 : 0;
        if (sources != 1)
            throw std::invalid_argument("config: exactly one game source must be given");

        if (g.contains("preset")) {
            config.preset = g.at("preset").get<std::string>();
            RewardDesign design =
                reward_design_from_string(g.value("reward_design", std::string("ii")));
            Preset preset = make_preset(config.preset, design);
            config.game = preset.game;
            config.covering = preset.covering;
            config.spi = preset.spi;
            game_echo["preset"] = config.preset;
            if (preset.covering) game_echo["reward_design"] = to_string(preset.covering->design);
        } else if (g.contains("covering")) {
            config.covering = detail::covering_from_json(g.at("covering"));
            config.game = build_covering_game(*config.covering);
            game_echo["covering"] = detail::covering_to_json(*config.covering);
        } else if (g.contains("tabular_path")) {
            config.tabular_path = g.at("tabular_path").get<std::string>();
            std::ifstream in(config.tabular_path);
            if (!in) throw std::invalid_argument("config: cannot open " + config.tabular_path);
            nlohmann::json tab = nlohmann::json::parse(in);
            config.game = to_game(tabular_from_json(tab));
            game_echo["tabular_path"] = config.tabular_path;
        } else {
            config.builtin = g.at("builtin").get<std::string>();
            if (config.builtin == "counterexample") config.game = build_counterexample();
            else if (config.builtin == "micro-g1") config.game = to_game(make_g1());
            else throw std::invalid_argument("config: unknown builtin '" + config.builtin + "'");
            game_echo["builtin"] = config.builtin;
        }
        ValidationReport report = validate_game(config.game);
        if (!report.ok())
            throw std::invalid_argument("config: invalid game: " + report.violations.front());
    }

    if (doc.contains("spi")) detail::apply_spi_json(doc.at("spi"), config.spi);
    config.spi.master_seed = config.seed;
    config.spi.threads = config.threads;

    if (doc.contains("analyzer")) {
        const nlohmann::json& a = doc.at("analyzer");
        detail::reject_unknown_keys(a, {"lambda_grid", "mu_search", "mu"}, "analyzer");
        if (a.contains("lambda_grid"))
            config.analyzer.lambda_grid = a.at("lambda_grid").get<std::vector<double>>();
        if (a.contains("mu_search")) config.analyzer.mu_search = a.at("mu_search").get<bool>();
        if (a.contains("mu")) config.analyzer.mu = a.at("mu").get<double>();
    }
    if (doc.contains("eval")) {
        const nlohmann::json& e = doc.at("eval");
        detail::reject_unknown_keys(e, {"policy_path", "allow_mc", "mc_episodes"}, "eval");
        if (e.contains("policy_path")) config.eval.policy_path = e.at("policy_path").get<std::string>();
        if (e.contains("allow_mc")) config.eval.allow_mc = e.at("allow_mc").get<bool>();
        if (e.contains("mc_episodes")) config.eval.mc_episodes = e.at("mc_episodes").get<long long>();
    }
    if (config.kind == ExperimentKind::SampleSizes) {
        if (!doc.contains("sizes"))
            throw std::invalid_argument("config: sample-sizes requires a sizes section");
        config.sizes = detail::sizes_from_json(doc.at("sizes"));
    }

    // Echo of the fully-resolved configuration (reruns reproduce outputs).
    nlohmann::json echo;
    echo["experiment"] = to_string(config.kind);
    echo["seed"] = config.seed;
    echo["out_dir"] = config.out_dir;
    echo["threads"] = config.threads;
    if (!game_echo.is_null()) echo["game"] = game_echo;
    if (config.kind == ExperimentKind::Simulate) {
        nlohmann::json spi;
        spi["T_G"] = config.spi.T_G;
        spi["T_J"] = config.spi.T_J;
        spi["T_K"] = config.spi.T_K;
        spi["use_exact_q"] = config.spi.use_exact_q;
        spi["exact_eval_logging"] = config.spi.exact_eval_logging;
        spi["per_agent_rollouts"] = config.spi.per_agent_rollouts;
        spi["stepsize"] = detail::schedule_to_json(config.spi.schedule);
        spi["enum_cap"] = config.spi.enum_cap;
        spi["debug_checks"] = config.spi.debug_checks;
        echo["spi"] = spi;
    }
    if (config.kind == ExperimentKind::AnalyzeSmoothness) {
        nlohmann::json a;
        a["lambda_grid"] = config.analyzer.lambda_grid;
        a["mu_search"] = config.analyzer.mu_search;
        if (config.analyzer.mu) a["mu"] = *config.analyzer.mu;
        echo["analyzer"] = a;
    }
    if (config.kind == ExperimentKind::EvalPolicy) {
        nlohmann::json e;
        if (!config.eval.policy_path.empty()) e["policy_path"] = config.eval.policy_path;
        e["allow_mc"] = config.eval.allow_mc;
        if (config.eval.allow_mc) e["mc_episodes"] = config.eval.mc_episodes;
        echo["eval"] = e;
    }
    if (config.kind == ExperimentKind::SampleSizes) {
        nlohmann::json s;
        s["n"] = config.sizes.n;
        s["H"] = config.sizes.H;
        s["state_sizes"] = config.sizes.state_sizes;
        s["action_sizes"] = config.sizes.action_sizes;
        s["phi_range"] = config.sizes.phi_range;
        s["c"] = config.sizes.c;
        s["epsilon"] = config.sizes.epsilon;
        s["delta"] = config.sizes.delta;
        echo["sizes"] = s;
    }
    config.echo = echo;
    return config;
}

inline ExperimentConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("config: cannot open " + path);
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw std::invalid_argument("config: parse error in " + path + ": " + e.what());
    }
    return parse_config(doc);
}

/// Policy document: {"agents": [[[row...]...]...]} with rows[h-1][s][a].
inline JointPolicy policy_from_json(const GameDefinition& game, const nlohmann::json& doc) {
    detail::reject_unknown_keys(doc, {"agents"}, "policy");
    JointPolicy policy;
    for (const auto& rows : doc.at("agents")) {
        LocalPolicy lp;
        lp.rows = rows.get<std::vector<std::vector<std::vector<double>>>>();
        policy.agents.push_back(std::move(lp));
    }
    ValidationReport report = validate_policy(game, policy);
    if (!report.ok())
        throw std::invalid_argument("policy: invalid: " + report.violations.front());
    return policy;
}

inline nlohmann::json policy_to_json(const JointPolicy& policy) {
    nlohmann::json agents = nlohmann::json::array();
    for (const auto& lp : policy.agents) agents.push_back(lp.rows);
    return {{"agents", agents}};
}

}  // namespace mpg
