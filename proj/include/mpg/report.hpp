#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "mpg/spi.hpp"

namespace mpg {

/// Full-precision decimal rendering (17 significant digits round-trips
/// doubles bitwise). NaN renders as an empty CSV field.
inline std::string format_double(double v) {
    if (std::isnan(v)) return "";
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::string csv_header(int num_agents) {
    std::string header = "t,eta,ne_gap_total";
    for (int i = 0; i < num_agents; ++i) header += ",ne_gap_" + std::to_string(i);
    header += ",welfare,potential,q_err_max";
    return header;
}

inline std::string csv_row(const IterationLog& log, int num_agents) {
    std::string row = std::to_string(log.t) + ',' + format_double(log.eta) + ',' +
                      format_double(log.ne_gap_total);
    for (int i = 0; i < num_agents; ++i)
        row += ',' + (i < static_cast<int>(log.ne_gap.size()) ? format_double(log.ne_gap[i])
                                                              : std::string());
    row += ',' + format_double(log.welfare);
    row += ',' + (log.potential ? format_double(*log.potential) : std::string());
    row += ',' + format_double(log.q_err_max);
    return row;
}

inline std::string render_csv(const std::vector<IterationLog>& logs, int num_agents) {
    std::string out = csv_header(num_agents) + '\n';
    for (const auto& log : logs) out += csv_row(log, num_agents) + '\n';
    return out;
}

struct RunReport {
    nlohmann::json config_echo;
    std::string csv;  // may be empty for non-simulate experiments
    nlohmann::json summary;
};

inline void write_report(const RunReport& report, const std::string& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    if (!report.csv.empty()) {
        std::ofstream csv(fs::path(out_dir) / "iterations.csv", std::ios::binary);
        if (!csv) throw std::runtime_error("write_report: cannot write iterations.csv");
        csv << report.csv;
    }
    nlohmann::json doc;
    doc["config"] = report.config_echo;
    doc["summary"] = report.summary;
    doc["version"] = "mpg-lab 0.1.0";
    std::ofstream out(fs::path(out_dir) / "report.json", std::ios::binary);
    if (!out) throw std::runtime_error("write_report: cannot write report.json");
    out << doc.dump(2) << '\n';
}

/// Minimal static SVG line chart of NE-gap and welfare against t.
inline std::string render_chart_svg(const std::vector<IterationLog>& logs) {
    const double width = 720, height = 360, ml = 60, mr = 20, mt = 20, mb = 40;
    std::string svg = "<svg xmlns='http://www.w3.org/2000/svg' width='" +
                      std::to_string(static_cast<int>(width)) + "' height='" +
                      std::to_string(static_cast<int>(height)) + "'>\n";
    svg += "<rect width='100%' height='100%' fill='white'/>\n";
    if (logs.empty()) return svg + "</svg>\n";

    double tmax = 1, gap_max = 0, w_max = 0;
    for (const auto& log : logs) {
        tmax = std::max(tmax, static_cast<double>(log.t));
        if (!std::isnan(log.ne_gap_total)) gap_max = std::max(gap_max, log.ne_gap_total);
        if (!std::isnan(log.welfare)) w_max = std::max(w_max, log.welfare);
    }
    gap_max = std::max(gap_max, 1e-12);
    w_max = std::max(w_max, 1e-12);

    auto xpos = [&](double t) { return ml + (t - 1) / std::max(1.0, tmax - 1) * (width - ml - mr); };
    auto ypos = [&](double v, double vmax) { return height - mb - v / vmax * (height - mt - mb); };
    auto polyline = [&](double vmax, auto get, const char* color) {
        std::string points;
        for (const auto& log : logs) {
            const double v = get(log);
            if (std::isnan(v)) continue;
            points += std::to_string(xpos(log.t)) + "," + std::to_string(ypos(v, vmax)) + " ";
        }
        return "<polyline fill='none' stroke='" + std::string(color) + "' stroke-width='1.5' points='" +
               points + "'/>\n";
    };
    // axes
    svg += "<line x1='" + std::to_string(ml) + "' y1='" + std::to_string(height - mb) + "' x2='" +
           std::to_string(width - mr) + "' y2='" + std::to_string(height - mb) +
           "' stroke='black'/>\n";
    svg += "<line x1='" + std::to_string(ml) + "' y1='" + std::to_string(mt) + "' x2='" +
           std::to_string(ml) + "' y2='" + std::to_string(height - mb) + "' stroke='black'/>\n";
    svg += polyline(gap_max, [](const IterationLog& l) { return l.ne_gap_total; }, "#c0392b");
    svg += polyline(w_max, [](const IterationLog& l) { return l.welfare; }, "#2980b9");
    svg += "<text x='" + std::to_string(ml + 8) + "' y='" + std::to_string(mt + 14) +
           "' fill='#c0392b' font-size='12'>NE-gap (max " + format_double(gap_max) + ")</text>\n";
    svg += "<text x='" + std::to_string(ml + 8) + "' y='" + std::to_string(mt + 30) +
           "' fill='#2980b9' font-size='12'>welfare (max " + format_double(w_max) + ")</text>\n";
    svg += "<text x='" + std::to_string(width / 2) + "' y='" + std::to_string(height - 10) +
           "' font-size='12'>t</text>\n";
    return svg + "</svg>\n";
}

/// Reads iterations.csv rows back into logs (for the chart subcommand).
inline std::vector<IterationLog> parse_csv(std::istream& is, int* num_agents_out = nullptr) {
    std::string line;
    if (!std::getline(is, line)) throw std::invalid_argument("parse_csv: empty file");
    int agents = 0;
    {
        size_t pos = 0;
        while ((pos = line.find(",ne_gap_" + std::to_string(agents), pos)) != std::string::npos) {
            ++agents;
            pos = 0;
        }
    }
    if (num_agents_out) *num_agents_out = agents;
    std::vector<IterationLog> logs;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cells;
        size_t start = 0;
        while (true) {
            size_t comma = line.find(',', start);
            cells.push_back(line.substr(start, comma - start));
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        auto num = [&](size_t idx) {
            return (idx < cells.size() && !cells[idx].empty())
                       ? std::stod(cells[idx])
                       : std::numeric_limits<double>::quiet_NaN();
        };
        IterationLog log;
        log.t = static_cast<long long>(num(0));
        log.eta = num(1);
        log.ne_gap_total = num(2);
        for (int i = 0; i < agents; ++i) log.ne_gap.push_back(num(3 + i));
        log.welfare = num(3 + agents);
        const double phi = num(4 + agents);
        if (!std::isnan(phi)) log.potential = phi;
        log.q_err_max = num(5 + agents);
        logs.push_back(std::move(log));
    }
    return logs;
}

}  // namespace mpg
