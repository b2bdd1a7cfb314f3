// Copyright (c) 2026 The SparseBalance Authors
// SPDX-License-Identifier: Apache-2.0

#include "sparsebalance/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>

#include <nlohmann/json.hpp>

#include "sparsebalance/config.hpp"
#include "sparsebalance/dst.hpp"
#include "sparsebalance/errors.hpp"
#include "sparsebalance/log.hpp"
#include "sparsebalance/parallel.hpp"
#include "sparsebalance/report.hpp"
#include "sparsebalance/sab.hpp"

namespace sparsebalance {

namespace fs = std::filesystem;

namespace {

using nlohmann::json;

RunConfig config_from_path(const std::string& path) {
  return path.empty() ? default_run_config() : load_run_config(path);
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory " + dir + ": " + ec.message());
}

std::string join_path(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

// Re-derives one scenario's first-iteration plan and DST decisions exactly as
// run_scenarios produced them (fresh estimator, iteration stream 0).
void dump_first_iteration(const SimHarness& harness, const ScenarioSpec& spec,
                          const std::string& dir) {
  SparsityEstimator est =
      make_estimator(harness.estimator.bin_edges, harness.table.budget_grid,
                     harness.estimator.ema_alpha, harness.estimator.default_budget);
  IterationSetup setup;
  setup.cluster = harness.cluster;
  setup.shape = harness.shape;
  setup.base_budget = harness.base_budget;
  setup.base_mode = harness.base_mode;
  setup.base_coverage_target = harness.base_coverage_target;
  setup.dst_scope = harness.dst_scope;
  setup.dst = spec.dst.has_value() ? *spec.dst : harness.dst;
  setup.dst.budget_grid = harness.table.budget_grid;
  setup.calibrate_every = harness.estimator.calibrate_every;

  const std::uint64_t seed_base = spec.seed != 0 ? spec.seed : harness.seed;
  std::vector<Sample> samples = generate_samples(
      harness.workload.distribution, harness.shape.gbs,
      concentration_at(harness.workload.concentration, 0), harness.cluster.num_layers(),
      harness.workload.block_size, mix_seed(seed_base, 0));

  std::vector<BudgetDecision> decisions;
  PackingPlan plan;
  simulate_iteration(samples, spec.strategy, setup, harness.table, est, 0, &decisions, &plan);

  save_plan_json(plan, join_path(dir, "plan_" + spec.name + ".json"));
  if (strategy_uses_dst(spec.strategy)) {
    write_decisions_csv(decisions, 0, join_path(dir, "decisions_" + spec.name + ".csv"));
  }
}

void write_run_outputs(const RunConfig& config, const SimHarness& harness,
                       const ComparisonReport& report, const std::string& dir) {
  ensure_dir(dir);
  write_iterations_csv(report, join_path(dir, "iterations.csv"));
  write_comparison_json(report, join_path(dir, "comparison.json"));
  if (config.emit_svg) write_speedup_svg(report, join_path(dir, "speedup.svg"));
  if (config.dump_plans) {
    for (const ScenarioSpec& spec : config.scenarios) dump_first_iteration(harness, spec, dir);
  }
}

struct SweepPoint {
  std::string value;
  std::string dir;
  RunConfig config;
  ComparisonReport report;
};

void apply_sweep_value(RunConfig& config, const std::string& axis, const std::string& value) {
  if (axis == "p") {
    double p = 0.0;
    try {
      std::size_t pos = 0;
      p = std::stod(value, &pos);
      if (pos != value.size()) throw std::invalid_argument(value);
    } catch (const std::exception&) {
      throw ConfigError("sweep value '" + value + "' is not a number");
    }
    if (p < 0.0 || p > 1.0) throw ConfigError("sweep value '" + value + "' outside [0,1]");
    config.dst.threshold_p = p;
    for (ScenarioSpec& s : config.scenarios) {
      if (s.dst.has_value()) s.dst->threshold_p = p;
    }
  } else if (axis == "anchor") {
    const AnchorStrategy anchor = parse_anchor(value);
    config.dst.anchor = anchor;
    for (ScenarioSpec& s : config.scenarios) {
      if (s.dst.has_value()) s.dst->anchor = anchor;
    }
  } else if (axis == "mbs") {
    int mbs = 0;
    try {
      std::size_t pos = 0;
      mbs = std::stoi(value, &pos);
      if (pos != value.size()) throw std::invalid_argument(value);
    } catch (const std::exception&) {
      throw ConfigError("sweep value '" + value + "' is not an integer");
    }
    if (mbs < 1) throw ConfigError("sweep value 'mbs' must be >= 1");
    validate_plan_shape(config.batch);  // need a consistent starting shape
    const int per_rank_mbs = config.batch.gbs / (config.batch.dp * config.batch.mbs);
    // Keep the per-rank micro-batch count fixed so pipeline depth is comparable
    // across points; the global batch grows with the micro-batch size.
    config.batch.mbs = mbs;
    config.batch.gbs = per_rank_mbs * config.batch.dp * mbs;
  } else {
    throw ConfigError("unknown sweep axis '" + axis + "' (expected p, anchor, or mbs)");
  }
}

}  // namespace

void cmd_gen_profile(const GenProfileOptions& options) {
  std::vector<std::int64_t> bins =
      options.length_bins.empty() ? default_length_bins() : options.length_bins;
  std::vector<int> grid = options.budget_grid.empty() ? default_budget_grid() : options.budget_grid;
  CostModelSpec model = options.model;
  validate_cost_model(model);
  ProfileTable table = synthesize_table(model, bins, grid, options.seed);
  save_table(table, options.output_path);
  std::cout << "wrote " << table.length_bins.size() << "x" << table.budget_grid.size()
            << " profile table (" << table.length_bins.size() * table.budget_grid.size()
            << " cells) to " << options.output_path << "\n";
}

void cmd_gen_workload(const GenWorkloadOptions& options) {
  RunConfig config = config_from_path(options.config_path);
  if (options.seed.has_value()) config.seed = *options.seed;
  validate_run_config(config);
  if (options.count < 1) throw ConfigError("count: must be >= 1");
  if (options.histogram_bins < 1) throw ConfigError("histogram bins: must be >= 1");

  // Stream 0 of the run seed: with count == gbs this emits exactly the samples
  // the first simulated iteration consumes.
  std::vector<Sample> samples =
      generate_samples(config.distribution, options.count, config.concentration,
                       config.cluster.num_layers(), config.block_size, mix_seed(config.seed, 0));

  std::ofstream out(options.output_path);
  if (!out) throw std::runtime_error("cannot write: " + options.output_path);
  out << "id,length,k90\n";
  char buf[96];
  double k90_total = 0.0;
  std::int64_t min_len = samples.front().length;
  std::int64_t max_len = samples.front().length;
  for (const Sample& s : samples) {
    double k90 = 0.0;
    for (const RoutingProfile& profile : s.routing_profiles) {
      k90 += coverage_budget(profile, 0.9);
    }
    k90 /= static_cast<double>(s.routing_profiles.size());
    k90_total += k90;
    min_len = std::min(min_len, s.length);
    max_len = std::max(max_len, s.length);
    std::snprintf(buf, sizeof(buf), "%lld,%lld,%.2f\n", static_cast<long long>(s.id),
                  static_cast<long long>(s.length), k90);
    out << buf;
  }
  if (!out) throw std::runtime_error("failed writing: " + options.output_path);

  if (!options.histogram_path.empty()) {
    // Log-spaced half-open bins covering every observed length.
    const double lo = static_cast<double>(min_len);
    const double hi = static_cast<double>(max_len) + 1.0;
    std::vector<std::int64_t> edges;
    edges.push_back(min_len);
    for (int i = 1; i <= options.histogram_bins; ++i) {
      const double f = static_cast<double>(i) / options.histogram_bins;
      std::int64_t e = static_cast<std::int64_t>(std::llround(lo * std::pow(hi / lo, f)));
      e = std::max(e, edges.back() + 1);
      edges.push_back(e);
    }
    edges.back() = std::max(edges.back(), max_len + 1);
    std::vector<HistogramBin> bins(edges.size() - 1);
    for (std::size_t i = 0; i < bins.size(); ++i) bins[i] = {edges[i], edges[i + 1], 0.0};
    for (const Sample& s : samples) {
      const auto it = std::upper_bound(edges.begin(), edges.end(), s.length);
      bins[static_cast<std::size_t>(it - edges.begin()) - 1].frequency += 1.0;
    }
    bins.erase(std::remove_if(bins.begin(), bins.end(),
                              [](const HistogramBin& b) { return b.frequency == 0.0; }),
               bins.end());
    save_histogram(bins, options.histogram_path);
  }

  std::cout << "wrote " << samples.size() << " samples to " << options.output_path
            << " (length range [" << min_len << ", " << max_len << "], mean k90 "
            << k90_total / static_cast<double>(samples.size()) << ")\n";
  if (!options.histogram_path.empty()) {
    std::cout << "wrote length histogram to " << options.histogram_path << "\n";
  }
}

void cmd_run(const RunOptions& options) {
  RunConfig config = config_from_path(options.config_path);
  if (options.seed.has_value()) config.seed = *options.seed;
  if (options.iterations.has_value()) config.iterations = *options.iterations;
  if (!options.scenarios.empty()) {
    std::vector<ScenarioSpec> selected;
    for (const std::string& name : options.scenarios) {
      const auto it = std::find_if(config.scenarios.begin(), config.scenarios.end(),
                                   [&](const ScenarioSpec& s) {
                                     return s.name == name || (s.name.empty() &&
                                                               strategy_name(s.strategy) == name);
                                   });
      if (it != config.scenarios.end()) {
        selected.push_back(*it);
      } else {
        ScenarioSpec spec;
        spec.strategy = parse_strategy(name);  // throws ConfigError for unknown names
        spec.name = name;
        selected.push_back(spec);
      }
    }
    config.scenarios = std::move(selected);
  }
  validate_run_config(config);

  SimHarness harness = build_harness(config);
  harness.jobs = std::max(1, options.jobs);
  const ComparisonReport report = run_scenarios(harness, config.scenarios);

  write_run_outputs(config, harness, report, options.output_dir);
  std::cout << summary_table(report);
  std::cout << "outputs in " << options.output_dir << ": iterations.csv, comparison.json"
            << (config.emit_svg ? ", speedup.svg" : "") << "\n";
}

void cmd_sweep(const SweepOptions& options) {
  if (options.values.empty()) throw ConfigError("sweep: at least one value required");
  RunConfig base = config_from_path(options.config_path);
  if (options.seed.has_value()) base.seed = *options.seed;

  std::vector<SweepPoint> points(options.values.size());
  for (std::size_t i = 0; i < options.values.size(); ++i) {
    points[i].value = options.values[i];
    points[i].dir = join_path(options.output_dir, options.axis + "_" + options.values[i]);
    points[i].config = base;
    apply_sweep_value(points[i].config, options.axis, options.values[i]);
    validate_run_config(points[i].config);
  }

  ensure_dir(options.output_dir);
  // Workload streams depend only on (seed, iteration), so every point sees the
  // same sample sequence: the axis is the only thing that varies.
  parallel_for(points.size(), std::max(1, options.jobs), [&](std::size_t i) {
    SweepPoint& point = points[i];
    SimHarness harness = build_harness(point.config);
    point.report = run_scenarios(harness, point.config.scenarios);
    write_run_outputs(point.config, harness, point.report, point.dir);
  });

  std::string summary = "axis,value,scenario,mean_iter_ms,mean_imbalance,speedup\n";
  char buf[160];
  json sweep_json{{"axis", options.axis}, {"seed", base.seed}, {"points", json::array()}};
  for (const SweepPoint& point : points) {
    for (const ScenarioStats& s : point.report.scenarios) {
      std::snprintf(buf, sizeof(buf), "%s,%s,%s,%.6f,%.6f,%.6f\n", options.axis.c_str(),
                    point.value.c_str(), s.name.c_str(), s.mean_iter_ms, s.mean_imbalance,
                    s.speedup);
      summary += buf;
    }
    sweep_json["points"].push_back({{"value", point.value},
                                    {"dir", point.dir},
                                    {"comparison", comparison_to_json(point.report)}});
  }
  const std::string summary_path = join_path(options.output_dir, "sweep_summary.csv");
  std::ofstream out(summary_path);
  if (!out) throw std::runtime_error("cannot write: " + summary_path);
  out << summary;
  std::ofstream jout(join_path(options.output_dir, "sweep.json"));
  if (!jout) throw std::runtime_error("cannot write sweep.json");
  jout << sweep_json.dump(2) << "\n";

  std::cout << summary;
  std::cout << "sweep outputs in " << options.output_dir << "\n";
}

void cmd_report(const ReportOptions& options) {
  std::ifstream in(options.input_path);
  if (!in) throw ConfigError("comparison file not readable: " + options.input_path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError(options.input_path + ": JSON parse error: " + e.what());
  }
  const ComparisonReport report = comparison_from_json(j);
  std::cout << summary_table(report);
  std::string svg_path = options.svg_path;
  if (svg_path.empty()) svg_path = fs::path(options.input_path).replace_extension(".svg").string();
  write_speedup_svg(report, svg_path);
  std::cout << "wrote " << svg_path << "\n";
}

int run_command(const std::function<void()>& fn) {
  try {
    fn();
    return kExitOk;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntimeError;
  }
}

}  // namespace sparsebalance
