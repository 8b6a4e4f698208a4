// mpg-lab: experiment harness for decoupled Markov games.
//
//   mpg-lab <subcommand> --config <path> [--out <dir>] [--seed <u64>] [--threads <k>]
//   mpg-lab chart --csv <path> --out-svg <path>
//
// Exit codes: 0 success, 1 configuration error, 2 runtime error.

#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "mpg/experiment.hpp"

namespace {

struct CommonArgs {
    std::string config_path;
    std::string out_dir;
    uint64_t seed = 0;
    bool seed_set = false;
    int threads = 0;
};

int run_kind(mpg::ExperimentKind kind, const CommonArgs& args) {
    mpg::ExperimentConfig config;
    try {
        config = mpg::parse_config_file(args.config_path);
        if (config.kind != kind) {
            std::cerr << "config names experiment '" << mpg::to_string(config.kind)
                      << "' but subcommand is '" << mpg::to_string(kind) << "'\n";
            return 1;
        }
        if (args.seed_set) {
            config.seed = args.seed;
            config.spi.master_seed = args.seed;
            config.echo["seed"] = args.seed;
        }
        if (args.threads > 0) {
            config.threads = args.threads;
            config.spi.threads = args.threads;
            config.echo["threads"] = args.threads;
        }
        if (!args.out_dir.empty()) {
            config.out_dir = args.out_dir;
            config.echo["out_dir"] = args.out_dir;
        }
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 1;
    }
    try {
        mpg::RunReport report = mpg::run_experiment(config);
        mpg::write_report(report, config.out_dir);
        std::cout << "wrote " << config.out_dir << "/report.json";
        if (!report.csv.empty()) std::cout << " and " << config.out_dir << "/iterations.csv";
        std::cout << '\n';
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "runtime error: " << e.what() << '\n';
        return 2;
    }
}

int run_chart(const std::string& csv_path, const std::string& svg_path) {
    try {
        std::ifstream in(csv_path);
        if (!in) {
            std::cerr << "config error: cannot open " << csv_path << '\n';
            return 1;
        }
        std::vector<mpg::IterationLog> logs = mpg::parse_csv(in);
        std::ofstream out(svg_path, std::ios::binary);
        if (!out) {
            std::cerr << "runtime error: cannot write " << svg_path << '\n';
            return 2;
        }
        out << mpg::render_chart_svg(logs);
        std::cout << "wrote " << svg_path << '\n';
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "runtime error: " << e.what() << '\n';
        return 2;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"experiment harness for decoupled Markov games"};
    app.require_subcommand(1);

    CommonArgs args;
    std::string csv_path, svg_path;
    std::vector<std::pair<std::string, mpg::ExperimentKind>> kinds = {
        {"simulate", mpg::ExperimentKind::Simulate},
        {"analyze-smoothness", mpg::ExperimentKind::AnalyzeSmoothness},
        {"counterexample", mpg::ExperimentKind::Counterexample},
        {"eval-policy", mpg::ExperimentKind::EvalPolicy},
        {"sample-sizes", mpg::ExperimentKind::SampleSizes},
    };

    std::map<std::string, CLI::App*> subs;
    for (const auto& [name, kind] : kinds) {
        CLI::App* sub = app.add_subcommand(name);
        sub->add_option("--config", args.config_path, "experiment document (JSON)")->required();
        sub->add_option("--out", args.out_dir, "output directory (overrides config)");
        sub->add_option("--seed", args.seed, "master seed (overrides config)")
            ->check(CLI::NonNegativeNumber);
        sub->add_option("--threads", args.threads, "worker threads");
        subs[name] = sub;
    }
    CLI::App* chart = app.add_subcommand("chart", "render an SVG chart from iterations.csv");
    chart->add_option("--csv", csv_path, "iterations.csv path")->required();
    chart->add_option("--out-svg", svg_path, "output SVG path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    if (chart->parsed()) return run_chart(csv_path, svg_path);
    for (const auto& [name, kind] : kinds) {
        if (subs[name]->parsed()) {
            if (subs[name]->count("--seed") > 0) args.seed_set = true;
            return run_kind(kind, args);
        }
    }
    return 1;
}
