#pragma once

#include "mpg/config.hpp"
#include "mpg/report.hpp"

namespace mpg {

namespace detail {

inline nlohmann::json certificate_to_json(const SmoothnessCertificate& cert) {
    nlohmann::json doc;
    doc["lambda"] = cert.lambda;
    doc["mu"] = cert.mu;
    doc["certified"] = cert.certified;
    if (cert.certified) doc["poa_lower_bound"] = cert.poa_lower;
    if (cert.witness)
        doc["witness"] = {{"profile", (*cert.witness)[0]},
                          {"deviation", (*cert.witness)[1]},
                          {"horizon", (*cert.witness)[2]}};
    return doc;
}

inline nlohmann::json ne_set_to_json(const NeSet2x2& set) {
    nlohmann::json doc;
    nlohmann::json nes = nlohmann::json::array();
    for (const auto& rec : set.nes) {
        nlohmann::json n;
        n["strategy"] = rec.strategy;
        n["welfare"] = rec.welfare;
        n["gap"] = rec.gap;
        n["pure"] = rec.pure;
        nes.push_back(n);
    }
    doc["nes"] = nes;
    doc["worst_welfare"] = set.worst_welfare;
    doc["optimum"] = set.optimum;
    doc["poa"] = set.poa;
    doc["continuum"] = set.continuum;
    return doc;
}

inline RunReport run_simulate(const ExperimentConfig& config) {
    SpiResult result = run(config.game, config.spi);
    RunReport report;
    report.config_echo = config.echo;
    report.csv = render_csv(result.logs, config.game.num_agents);

    nlohmann::json summary;
    summary["iterations"] = config.spi.T_G;
    if (config.spi.exact_eval_logging) {
        summary["min_ne_gap_total"] = result.min_gap;
        summary["argmin_t"] = result.argmin_t;
        const IterationLog& last = result.logs.back();
        summary["final_ne_gap_total"] = last.ne_gap_total;
        summary["final_welfare"] = last.welfare;
        try {
            const double opt = centralized_optimal_welfare(config.game, config.spi.enum_cap);
            summary["optimal_welfare_upper_bound"] = opt;
            if (opt > 0) summary["welfare_ratio"] = last.welfare / opt;
        } catch (const SizeCapError&) {
            summary["optimal_welfare_upper_bound"] = nullptr;
        }
    }
    long long r_fallback = 0;
    for (const auto& log : result.logs) r_fallback += log.r_fallback_cells;
    summary["r_fallback_cells_total"] = r_fallback;
    summary["p_fallback_cells"] = result.p_fallback_cells;
    if (config.spi.debug_checks) {
        summary["ascent_checks"] = result.ascent_checks.size();
        long long bad = 0;
        for (const auto& chk : result.ascent_checks)
            if (!chk.ok) ++bad;
        summary["ascent_violations"] = bad;
        summary["q_bound_violations"] = result.bound_violations.size();
    }
    report.summary = summary;
    return report;
}

inline RunReport run_analyze_smoothness(const ExperimentConfig& config) {
    RunReport report;
    report.config_echo = config.echo;
    nlohmann::json certs = nlohmann::json::array();
    for (double lambda : config.analyzer.lambda_grid) {
        if (config.analyzer.mu_search) {
            // per-horizon search; the Markov-game mu is the max over horizons
            bool feasible = true;
            double mu = 0.0;
            nlohmann::json binding;
            for (int h = 1; h <= config.game.horizon && feasible; ++h) {
                StageGame stage = stage_game_from_markov(config.game, h, config.spi.enum_cap);
                MuSearchResult res = min_mu_for_lambda(stage, lambda);
                if (!res.feasible) {
                    feasible = false;
                    binding = {{"horizon", h},
                               {"profile", (*res.binding)[0]},
                               {"deviation", (*res.binding)[1]}};
                } else if (res.mu >= mu) {
                    mu = res.mu;
                    if (res.binding)
                        binding = {{"horizon", h},
                                   {"profile", (*res.binding)[0]},
                                   {"deviation", (*res.binding)[1]}};
                }
            }
            nlohmann::json entry;
            entry["lambda"] = lambda;
            entry["feasible"] = feasible;
            if (feasible) {
                entry["mu"] = mu;
                entry["poa_lower_bound"] = lambda / (1.0 + mu);
            }
            if (!binding.is_null()) entry["binding"] = binding;
            certs.push_back(entry);
        } else {
            const double mu = config.analyzer.mu.value_or(0.0);
            certs.push_back(
                certificate_to_json(check_smoothness(config.game, lambda, mu, config.spi.enum_cap)));
        }
    }
    report.summary["certificates"] = certs;
    return report;
}

inline RunReport run_counterexample(const ExperimentConfig& config) {
    RunReport report;
    report.config_echo = config.echo;

    const StageGame table2 = identical_interest_2x2({{{2.0, 0.0}, {0.0, 2.0}}});
    const StageGame table3 = identical_interest_2x2({{{0.0, 1.0}, {1.0, 2.0}}});
    GameDefinition game = build_counterexample();
    StageGame reduced = reduce_to_normal_form(game);

    NeSet2x2 ne2 = analyze_2x2(table2);
    NeSet2x2 ne3 = analyze_2x2(table3);
    NeSet2x2 ne4 = analyze_2x2(reduced);

    nlohmann::json summary;
    summary["stage_h2"] = ne_set_to_json(ne2);
    summary["stage_h2"]["table"] = table2.welfare;
    summary["stage_h3"] = ne_set_to_json(ne3);
    summary["stage_h3"]["table"] = table3.welfare;
    summary["reduced_normal_form"] = {{"rewards", reduced.rewards},
                                      {"welfare", reduced.welfare}};
    summary["markov_game"] = ne_set_to_json(ne4);
    summary["stage_poa_h2"] = ne2.poa;
    summary["stage_poa_h3"] = ne3.poa;
    summary["markov_poa"] = ne4.poa;
    report.summary = summary;
    return report;
}

inline RunReport run_eval_policy(const ExperimentConfig& config) {
    RunReport report;
    report.config_echo = config.echo;
    JointPolicy policy;
    if (config.eval.policy_path.empty()) {
        policy = uniform_policy(config.game);
    } else {
        std::ifstream in(config.eval.policy_path);
        if (!in) throw std::invalid_argument("eval: cannot open " + config.eval.policy_path);
        policy = policy_from_json(config.game, nlohmann::json::parse(in));
    }
    nlohmann::json summary;
    EvaluationReport eval;
    try {
        eval = ne_gap(config.game, policy, config.spi.enum_cap);
        summary["ne_gap"] = eval.ne_gap;
        summary["ne_gap_total"] = eval.ne_gap_total;
    } catch (const SizeCapError&) {
        if (!config.eval.allow_mc) throw;
        eval = mc_expected_return(config.game, policy, config.eval.mc_episodes,
                                  RngSpec{config.seed}, config.threads);
    }
    summary["J"] = eval.J;
    summary["welfare"] = eval.W;
    if (eval.Phi) summary["potential"] = *eval.Phi;
    summary["approximate"] = eval.approximate;
    report.summary = summary;
    return report;
}

inline RunReport run_sample_sizes(const ExperimentConfig& config) {
    RunReport report;
    report.config_echo = config.echo;
    SampleSizeResult result = theoretical_sample_sizes(config.sizes);
    nlohmann::json summary;
    summary["T_G"] = result.T_G;
    summary["T_J"] = result.T_J;
    summary["T_K"] = result.T_K;
    summary["note"] =
        "Bounds assume stage rewards in [0,1]. Practical experiment scales are far below "
        "these values: the 7x7 covering runs use T_G=40, T_J=800, T_K=50000, which suffice "
        "to show convergence while the bounds above are astronomically larger for the same "
        "exploration constant.";
    summary["practical_reference"] = {{"T_G", 40}, {"T_J", 800}, {"T_K", 50000}};
    if (result.T_G > 0) summary["T_G_over_practical"] = result.T_G / 40.0;
    report.summary = summary;
    return report;
}

}  // namespace detail

inline RunReport run_experiment(const ExperimentConfig& config) {
    switch (config.kind) {
        case ExperimentKind::Simulate: return detail::run_simulate(config);
        case ExperimentKind::AnalyzeSmoothness: return detail::run_analyze_smoothness(config);
        case ExperimentKind::Counterexample: return detail::run_counterexample(config);
        case ExperimentKind::EvalPolicy: return detail::run_eval_policy(config);
        case ExperimentKind::SampleSizes: return detail::run_sample_sizes(config);
    }
    throw std::logic_error("run_experiment: unhandled kind");
}

}  // namespace mpg
