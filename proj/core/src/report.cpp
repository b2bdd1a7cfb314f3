// Copyright (c) 2026 The SparseBalance Authors
// SPDX-License-Identifier: Apache-2.0

#include "sparsebalance/report.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "sparsebalance/errors.hpp"

namespace sparsebalance {

namespace {

using nlohmann::json;

std::string fmt6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

void write_text_file(const std::string& text, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write: " + path);
  out << text;
  if (!out) throw std::runtime_error("failed writing: " + path);
}

json stats_to_json(const ScenarioStats& s) {
  return {{"strategy", strategy_name(s.strategy)},
          {"mean_iter_ms", s.mean_iter_ms},
          {"p50_iter_ms", s.p50_iter_ms},
          {"p90_iter_ms", s.p90_iter_ms},
          {"mean_imbalance", s.mean_imbalance},
          {"mean_bubble_ms", s.mean_bubble_ms},
          {"mean_dst_overhead_ms", s.mean_dst_overhead_ms},
          {"mean_sab_overhead_ms", s.mean_sab_overhead_ms},
          {"mean_avg_budget", s.mean_avg_budget},
          {"mean_cov_drop", s.mean_cov_drop},
          {"iterations", s.iterations.size()},
          {"speedup", s.speedup}};
}

}  // namespace

std::string iterations_csv(const ComparisonReport& report) {
  std::string out =
      "scenario,iter,iter_ms,imbalance,max_mb_ms,mean_mb_ms,bubble_ms,"
      "dst_overhead_ms,avg_budget,mean_cov_drop\n";
  for (const ScenarioStats& s : report.scenarios) {
    for (std::size_t i = 0; i < s.iterations.size(); ++i) {
      const ScheduleResult& r = s.iterations[i];
      out += s.name;
      out += ',';
      out += std::to_string(i);
      for (double v : {r.iter_ms, r.imbalance, r.max_mb_ms, r.mean_mb_ms, r.bubble_ms,
                       r.dst_overhead_ms, r.avg_budget, r.mean_cov_drop}) {
        out += ',';
        out += fmt6(v);
      }
      out += '\n';
    }
  }
  return out;
}

void write_iterations_csv(const ComparisonReport& report, const std::string& path) {
  write_text_file(iterations_csv(report), path);
}

nlohmann::json comparison_to_json(const ComparisonReport& report) {
  json scenarios = json::object();
  for (const ScenarioStats& s : report.scenarios) scenarios[s.name] = stats_to_json(s);
  return json{{"reference", report.reference}, {"seed", report.seed}, {"scenarios", scenarios}};
}

void write_comparison_json(const ComparisonReport& report, const std::string& path) {
  write_text_file(comparison_to_json(report).dump(2) + "\n", path);
}

ComparisonReport comparison_from_json(const nlohmann::json& j) {
  ComparisonReport report;
  try {
    report.reference = j.at("reference").get<std::string>();
    report.seed = j.at("seed").get<std::uint64_t>();
    const json& scenarios = j.at("scenarios");
    if (!scenarios.is_object()) throw ConfigError("comparison: scenarios must be an object");
    for (const auto& [name, sj] : scenarios.items()) {
      ScenarioStats s;
      s.name = name;
      s.strategy = parse_strategy(sj.at("strategy").get<std::string>());
      s.mean_iter_ms = sj.at("mean_iter_ms").get<double>();
      s.p50_iter_ms = sj.at("p50_iter_ms").get<double>();
      s.p90_iter_ms = sj.at("p90_iter_ms").get<double>();
      s.mean_imbalance = sj.at("mean_imbalance").get<double>();
      s.mean_bubble_ms = sj.at("mean_bubble_ms").get<double>();
      s.mean_dst_overhead_ms = sj.at("mean_dst_overhead_ms").get<double>();
      s.mean_sab_overhead_ms = sj.at("mean_sab_overhead_ms").get<double>();
      s.mean_avg_budget = sj.at("mean_avg_budget").get<double>();
      s.mean_cov_drop = sj.at("mean_cov_drop").get<double>();
      s.speedup = sj.at("speedup").get<double>();
      report.scenarios.push_back(std::move(s));
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("comparison JSON: ") + e.what());
  }
  // JSON objects iterate in sorted key order; keep the reference first so the
  // chart and table read in a stable, meaningful order.
  std::stable_sort(report.scenarios.begin(), report.scenarios.end(),
                   [&](const ScenarioStats& a, const ScenarioStats& b) {
                     return (a.name == report.reference) > (b.name == report.reference);
                   });
  return report;
}

std::string speedup_svg(const ComparisonReport& report) {
  const int width = 640;
  const int height = 360;
  const int margin_left = 60;
  const int margin_right = 20;
  const int margin_top = 40;
  const int margin_bottom = 60;
  const int plot_w = width - margin_left - margin_right;
  const int plot_h = height - margin_top - margin_bottom;

  double max_speedup = 1.0;
  for (const ScenarioStats& s : report.scenarios) max_speedup = std::max(max_speedup, s.speedup);
  const double y_max = max_speedup * 1.15;

  auto y_of = [&](double v) { return margin_top + plot_h * (1.0 - v / y_max); };

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(width) +
         "\" height=\"" + std::to_string(height) + "\" viewBox=\"0 0 " + std::to_string(width) +
         " " + std::to_string(height) + "\">\n";
  svg += "  <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg += "  <text x=\"" + std::to_string(width / 2) +
         "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">"
         "Iteration-time speedup vs " +
         (report.reference.empty() ? std::string("reference") : report.reference) + "</text>\n";

  // Axes.
  svg += "  <line x1=\"" + std::to_string(margin_left) + "\" y1=\"" + std::to_string(margin_top) +
         "\" x2=\"" + std::to_string(margin_left) + "\" y2=\"" +
         std::to_string(margin_top + plot_h) + "\" stroke=\"black\"/>\n";
  svg += "  <line x1=\"" + std::to_string(margin_left) + "\" y1=\"" +
         std::to_string(margin_top + plot_h) + "\" x2=\"" + std::to_string(width - margin_right) +
         "\" y2=\"" + std::to_string(margin_top + plot_h) + "\" stroke=\"black\"/>\n";

  // Y ticks at 0, 0.5, ..., y_max.
  for (double tick = 0.0; tick <= y_max + 1e-9; tick += 0.5) {
    const double y = y_of(tick);
    svg += "  <line x1=\"" + std::to_string(margin_left - 4) + "\" y1=\"" + fmt("%.1f", y) +
           "\" x2=\"" + std::to_string(margin_left) + "\" y2=\"" + fmt("%.1f", y) +
           "\" stroke=\"black\"/>\n";
    svg += "  <text x=\"" + std::to_string(margin_left - 8) + "\" y=\"" + fmt("%.1f", y + 4) +
           "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" +
           fmt("%.1f", tick) + "</text>\n";
  }

  // Dashed reference line at speedup 1.0.
  svg += "  <line x1=\"" + std::to_string(margin_left) + "\" y1=\"" + fmt("%.1f", y_of(1.0)) +
         "\" x2=\"" + std::to_string(width - margin_right) + "\" y2=\"" + fmt("%.1f", y_of(1.0)) +
         "\" stroke=\"#888\" stroke-dasharray=\"6 4\"/>\n";

  const std::size_t n = report.scenarios.size();
  if (n > 0) {
    const double slot = static_cast<double>(plot_w) / static_cast<double>(n);
    const double bar_w = slot * 0.6;
    for (std::size_t i = 0; i < n; ++i) {
      const ScenarioStats& s = report.scenarios[i];
      const double x = margin_left + slot * (static_cast<double>(i) + 0.2);
      const double y = y_of(s.speedup);
      const double h = margin_top + plot_h - y;
      const char* fill = s.name == report.reference ? "#9aa7b1" : "#4c78a8";
      svg += "  <rect x=\"" + fmt("%.1f", x) + "\" y=\"" + fmt("%.1f", y) + "\" width=\"" +
             fmt("%.1f", bar_w) + "\" height=\"" + fmt("%.1f", std::max(0.0, h)) + "\" fill=\"" +
             fill + "\"/>\n";
      svg += "  <text x=\"" + fmt("%.1f", x + bar_w / 2) + "\" y=\"" + fmt("%.1f", y - 6) +
             "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" +
             fmt("%.3f", s.speedup) + "</text>\n";
      svg += "  <text x=\"" + fmt("%.1f", x + bar_w / 2) + "\" y=\"" +
             std::to_string(margin_top + plot_h + 18) +
             "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" + s.name +
             "</text>\n";
    }
  }
  svg += "</svg>\n";
  return svg;
}

void write_speedup_svg(const ComparisonReport& report, const std::string& path) {
  write_text_file(speedup_svg(report), path);
}

std::string summary_table(const ComparisonReport& report) {
  char line[256];
  std::string out;
  std::snprintf(line, sizeof(line), "%-12s %12s %12s %12s %10s %10s %9s\n", "scenario",
                "mean_iter_ms", "p50_iter_ms", "p90_iter_ms", "imbalance", "avg_k", "speedup");
  out += line;
  out += std::string(82, '-') + "\n";
  for (const ScenarioStats& s : report.scenarios) {
    std::snprintf(line, sizeof(line), "%-12s %12.3f %12.3f %12.3f %10.4f %10.2f %8.3fx\n",
                  s.name.c_str(), s.mean_iter_ms, s.p50_iter_ms, s.p90_iter_ms, s.mean_imbalance,
                  s.mean_avg_budget, s.speedup);
    out += line;
  }
  return out;
}

}  // namespace sparsebalance
