// Copyright (c) 2026 The SparseBalance Authors
// SPDX-License-Identifier: Apache-2.0

#include "sparsebalance/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <unordered_set>

#include "sparsebalance/errors.hpp"
#include "sparsebalance/log.hpp"

namespace sparsebalance {

namespace {

using nlohmann::json;

// Strict object reader: flags unknown keys so config typos fail loudly with
// the offending field named.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_ + ": expected a JSON object");
  }

  ~ObjectReader() = default;

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      (void)value;
      if (consumed_.find(key) == consumed_.end()) {
        throw ConfigError(path_ + ": unknown field '" + key + "'");
      }
    }
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  const json* get(const std::string& key) {
    consumed_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  template <typename T>
  void read(const std::string& key, T& out) {
    const json* v = get(key);
    if (v == nullptr) return;
    try {
      out = v->get<T>();
    } catch (const json::exception&) {
      throw ConfigError(path_ + "." + key + ": invalid value type");
    }
  }

  std::string child_path(const std::string& key) const { return path_ + "." + key; }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> consumed_;
};

json cluster_to_json(const ClusterConfig& c) {
  return {{"dp", c.dp},
          {"pp", c.pp},
          {"layers_per_stage", c.layers_per_stage},
          {"fwd_bwd_ratio", c.fwd_bwd_ratio},
          {"comm_ms", c.comm_ms},
          {"dp_sync_ms", c.dp_sync_ms}};
}

ClusterConfig cluster_from_json(const json& j, const std::string& path) {
  ClusterConfig c;
  ObjectReader r(j, path);
  r.read("dp", c.dp);
  r.read("pp", c.pp);
  r.read("layers_per_stage", c.layers_per_stage);
  r.read("fwd_bwd_ratio", c.fwd_bwd_ratio);
  r.read("comm_ms", c.comm_ms);
  r.read("dp_sync_ms", c.dp_sync_ms);
  r.finish();
  return c;
}

json distribution_to_json(const LengthDistributionSpec& d) {
  json j{{"kind", distribution_kind_name(d.kind)},
         {"min_length", d.min_length},
         {"max_length", d.max_length}};
  switch (d.kind) {
    case LengthDistributionSpec::Kind::kFixed:
      j["fixed_length"] = d.fixed_length;
      break;
    case LengthDistributionSpec::Kind::kBimodal:
      j["short_weight"] = d.short_weight;
      j["short_log_mean"] = d.short_log_mean;
      j["short_log_sigma"] = d.short_log_sigma;
      j["long_log_mean"] = d.long_log_mean;
      j["long_log_sigma"] = d.long_log_sigma;
      break;
    case LengthDistributionSpec::Kind::kLongTail:
      j["tail_exponent"] = d.tail_exponent;
      break;
    case LengthDistributionSpec::Kind::kHistogram: {
      json bins = json::array();
      for (const HistogramBin& b : d.bins) bins.push_back({b.lo, b.hi, b.frequency});
      j["bins"] = bins;
      break;
    }
  }
  return j;
}

LengthDistributionSpec distribution_from_json(const json& j, const std::string& path) {
  LengthDistributionSpec d;
  ObjectReader r(j, path);
  std::string kind = distribution_kind_name(d.kind);
  r.read("kind", kind);
  d.kind = parse_distribution_kind(kind);
  r.read("min_length", d.min_length);
  r.read("max_length", d.max_length);
  r.read("fixed_length", d.fixed_length);
  r.read("short_weight", d.short_weight);
  r.read("short_log_mean", d.short_log_mean);
  r.read("short_log_sigma", d.short_log_sigma);
  r.read("long_log_mean", d.long_log_mean);
  r.read("long_log_sigma", d.long_log_sigma);
  r.read("tail_exponent", d.tail_exponent);
  if (const json* hist_path = r.get("histogram_path"); hist_path != nullptr) {
    LengthDistributionSpec loaded = load_histogram(hist_path->get<std::string>());
    d.kind = LengthDistributionSpec::Kind::kHistogram;
    d.bins = loaded.bins;
    d.min_length = loaded.min_length;
    d.max_length = loaded.max_length;
  }
  if (const json* bins = r.get("bins"); bins != nullptr) {
    d.bins.clear();
    if (!bins->is_array()) throw ConfigError(path + ".bins: expected an array");
    for (const auto& row : *bins) {
      if (!row.is_array() || row.size() != 3) {
        throw ConfigError(path + ".bins: each bin must be [lo, hi, frequency]");
      }
      d.bins.push_back(HistogramBin{row[0].get<std::int64_t>(), row[1].get<std::int64_t>(),
                                    row[2].get<double>()});
    }
    if (d.kind == LengthDistributionSpec::Kind::kHistogram && !d.bins.empty()) {
      d.min_length = d.bins.front().lo;
      d.max_length = d.bins.front().hi - 1;
      for (const HistogramBin& b : d.bins) {
        d.min_length = std::min(d.min_length, b.lo);
        d.max_length = std::max(d.max_length, b.hi - 1);
      }
    }
  }
  r.finish();
  return d;
}

json concentration_to_json(const ConcentrationSpec& c) {
  return {{"alpha_log_mean", c.alpha_log_mean},
          {"alpha_log_sigma", c.alpha_log_sigma},
          {"layer_log_sigma", c.layer_log_sigma},
          {"length_ref", c.length_ref},
          {"length_exponent", c.length_exponent},
          {"drift_amplitude", c.drift_amplitude},
          {"drift_period", c.drift_period}};
}

ConcentrationSpec concentration_from_json(const json& j, const std::string& path) {
  ConcentrationSpec c;
  ObjectReader r(j, path);
  r.read("alpha_log_mean", c.alpha_log_mean);
  r.read("alpha_log_sigma", c.alpha_log_sigma);
  r.read("layer_log_sigma", c.layer_log_sigma);
  r.read("length_ref", c.length_ref);
  r.read("length_exponent", c.length_exponent);
  r.read("drift_amplitude", c.drift_amplitude);
  r.read("drift_period", c.drift_period);
  r.finish();
  return c;
}

json scenario_to_json(const ScenarioSpec& s) {
  json j{{"strategy", strategy_name(s.strategy)}};
  if (!s.name.empty() && s.name != strategy_name(s.strategy)) j["name"] = s.name;
  if (s.dst.has_value()) {
    j["p"] = s.dst->threshold_p;
    j["anchor"] = anchor_name(s.dst->anchor);
  }
  if (s.iterations > 0) j["iterations"] = s.iterations;
  if (s.seed != 0) j["seed"] = s.seed;
  return j;
}

ScenarioSpec scenario_from_json(const json& j, const std::string& path,
                                const DstConfig& run_dst) {
  ScenarioSpec s;
  ObjectReader r(j, path);
  std::string strategy;
  r.read("strategy", strategy);
  if (strategy.empty()) throw ConfigError(path + ".strategy: required");
  s.strategy = parse_strategy(strategy);
  r.read("name", s.name);
  r.read("iterations", s.iterations);
  r.read("seed", s.seed);
  const json* p = r.get("p");
  const json* anchor = r.get("anchor");
  if (p != nullptr || anchor != nullptr) {
    if (!strategy_uses_dst(s.strategy)) {
      throw ConfigError(path + ": p/anchor overrides only apply to DST strategies");
    }
    DstConfig dst = run_dst;
    if (p != nullptr) dst.threshold_p = p->get<double>();
    if (anchor != nullptr) dst.anchor = parse_anchor(anchor->get<std::string>());
    s.dst = dst;
  }
  r.finish();
  return s;
}

}  // namespace

RunConfig default_run_config() {
  RunConfig config;
  config.batch = PlanShape{16, 2, config.cluster.dp};
  config.length_bins = default_length_bins();
  config.budget_grid = default_budget_grid();
  for (const char* name : {"baseline", "dst", "sab", "lbb", "sab_dst", "lbb_dst"}) {
    ScenarioSpec s;
    s.strategy = parse_strategy(name);
    s.name = name;
    config.scenarios.push_back(s);
  }
  return config;
}

nlohmann::json run_config_to_json(const RunConfig& config) {
  json scenarios = json::array();
  for (const ScenarioSpec& s : config.scenarios) scenarios.push_back(scenario_to_json(s));

  json table{{"path", config.table_path},
             {"cost_model",
              {{"c_lin", config.cost_model.c_lin},
               {"c_attn", config.cost_model.c_attn},
               {"c_fixed", config.cost_model.c_fixed},
               {"noise_sigma", config.cost_model.noise_sigma}}},
             {"length_bins", config.length_bins},
             {"budget_grid", config.budget_grid}};

  return json{{"seed", config.seed},
              {"iterations", config.iterations},
              {"block_size", config.block_size},
              {"base_budget", config.base_budget},
              {"base_budget_mode", base_budget_mode_name(config.base_budget_mode)},
              {"base_coverage_target", config.base_coverage_target},
              {"dst_scope", dst_scope_name(config.dst_scope)},
              {"emit_svg", config.emit_svg},
              {"dump_plans", config.dump_plans},
              {"cluster", cluster_to_json(config.cluster)},
              {"batch", {{"gbs", config.batch.gbs}, {"mbs", config.batch.mbs}}},
              {"distribution", distribution_to_json(config.distribution)},
              {"concentration", concentration_to_json(config.concentration)},
              {"table", table},
              {"dst", {{"threshold_p", config.dst.threshold_p}, {"anchor", anchor_name(config.dst.anchor)}}},
              {"estimator",
               {{"bin_edges", config.estimator.bin_edges},
                {"ema_alpha", config.estimator.ema_alpha},
                {"default_budget", config.estimator.default_budget},
                {"calibrate_every", config.estimator.calibrate_every}}},
              {"scenarios", scenarios}};
}

RunConfig run_config_from_json(const nlohmann::json& j) {
  RunConfig config = default_run_config();
  ObjectReader r(j, "config");
  r.read("seed", config.seed);
  r.read("iterations", config.iterations);
  r.read("block_size", config.block_size);
  r.read("base_budget", config.base_budget);
  std::string base_mode = base_budget_mode_name(config.base_budget_mode);
  r.read("base_budget_mode", base_mode);
  config.base_budget_mode = parse_base_budget_mode(base_mode);
  r.read("base_coverage_target", config.base_coverage_target);
  std::string scope = dst_scope_name(config.dst_scope);
  r.read("dst_scope", scope);
  config.dst_scope = parse_dst_scope(scope);
  r.read("emit_svg", config.emit_svg);
  r.read("dump_plans", config.dump_plans);
  if (const json* v = r.get("cluster"); v != nullptr) {
    config.cluster = cluster_from_json(*v, "config.cluster");
  }
  if (const json* v = r.get("batch"); v != nullptr) {
    ObjectReader b(*v, "config.batch");
    b.read("gbs", config.batch.gbs);
    b.read("mbs", config.batch.mbs);
    b.finish();
  }
  if (const json* v = r.get("distribution"); v != nullptr) {
    config.distribution = distribution_from_json(*v, "config.distribution");
  }
  if (const json* v = r.get("concentration"); v != nullptr) {
    config.concentration = concentration_from_json(*v, "config.concentration");
  }
  if (const json* v = r.get("table"); v != nullptr) {
    ObjectReader t(*v, "config.table");
    t.read("path", config.table_path);
    if (const json* cm = t.get("cost_model"); cm != nullptr) {
      ObjectReader m(*cm, "config.table.cost_model");
      m.read("c_lin", config.cost_model.c_lin);
      m.read("c_attn", config.cost_model.c_attn);
      m.read("c_fixed", config.cost_model.c_fixed);
      m.read("noise_sigma", config.cost_model.noise_sigma);
      m.finish();
    }
    t.read("length_bins", config.length_bins);
    t.read("budget_grid", config.budget_grid);
    t.finish();
  }
  if (const json* v = r.get("dst"); v != nullptr) {
    ObjectReader d(*v, "config.dst");
    d.read("threshold_p", config.dst.threshold_p);
    std::string anchor = anchor_name(config.dst.anchor);
    d.read("anchor", anchor);
    config.dst.anchor = parse_anchor(anchor);
    d.finish();
  }
  if (const json* v = r.get("estimator"); v != nullptr) {
    ObjectReader e(*v, "config.estimator");
    e.read("bin_edges", config.estimator.bin_edges);
    e.read("ema_alpha", config.estimator.ema_alpha);
    e.read("default_budget", config.estimator.default_budget);
    e.read("calibrate_every", config.estimator.calibrate_every);
    e.finish();
  }
  if (const json* v = r.get("scenarios"); v != nullptr) {
    if (!v->is_array()) throw ConfigError("config.scenarios: expected an array");
    config.scenarios.clear();
    for (std::size_t i = 0; i < v->size(); ++i) {
      config.scenarios.push_back(scenario_from_json(
          (*v)[i], "config.scenarios[" + std::to_string(i) + "]", config.dst));
    }
  }
  r.finish();
  return config;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config file not readable: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError(path + ": JSON parse error: " + e.what());
  }
  return run_config_from_json(j);
}

void save_run_config(const RunConfig& config, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write config: " + path);
  out << run_config_to_json(config).dump(2) << "\n";
  if (!out) throw std::runtime_error("failed writing config: " + path);
}

void validate_run_config(RunConfig& config) {
  if (config.iterations < 1) throw ConfigError("iterations: must be >= 1");
  if (config.block_size < 1) throw ConfigError("block_size: must be >= 1");
  if (config.base_budget < 1) throw ConfigError("base_budget: must be >= 1");
  if (config.base_coverage_target <= 0.0 || config.base_coverage_target > 1.0) {
    throw ConfigError("base_coverage_target: must be in (0, 1]");
  }
  validate_cluster(config.cluster);

  config.batch.dp = config.cluster.dp;
  validate_plan_shape(config.batch);

  validate_distribution(config.distribution);
  validate_concentration(config.concentration);

  if (config.table_path.empty()) {
    config.cost_model.block_size = config.block_size;
    validate_cost_model(config.cost_model);
    if (config.length_bins.empty()) config.length_bins = default_length_bins();
    if (config.budget_grid.empty()) config.budget_grid = default_budget_grid();
  }

  if (config.dst.threshold_p < 0.0 || config.dst.threshold_p > 1.0) {
    throw ConfigError("dst.threshold_p: must be in [0,1]");
  }
  if (config.estimator.ema_alpha <= 0.0 || config.estimator.ema_alpha > 1.0) {
    throw ConfigError("estimator.ema_alpha: must be in (0,1]");
  }
  if (config.estimator.calibrate_every < 1) {
    throw ConfigError("estimator.calibrate_every: must be >= 1");
  }
  if (config.estimator.default_budget < 1.0) {
    throw ConfigError("estimator.default_budget: must be >= 1");
  }
  for (std::size_t i = 1; i < config.estimator.bin_edges.size(); ++i) {
    if (config.estimator.bin_edges[i] <= config.estimator.bin_edges[i - 1]) {
      throw ConfigError("estimator.bin_edges: must be strictly ascending");
    }
  }

  if (config.scenarios.empty()) throw ConfigError("scenarios: must be non-empty");
  std::unordered_set<std::string> names;
  for (std::size_t i = 0; i < config.scenarios.size(); ++i) {
    ScenarioSpec& s = config.scenarios[i];
    if (s.name.empty()) s.name = strategy_name(s.strategy);
    if (!names.insert(s.name).second) {
      throw ConfigError("scenarios[" + std::to_string(i) + "].name: duplicate scenario name '" +
                        s.name + "'");
    }
    if (s.iterations < 0) {
      throw ConfigError("scenarios[" + std::to_string(i) + "].iterations: must be >= 0");
    }
    if (strategy_uses_dst(s.strategy)) {
      if (!s.dst.has_value()) s.dst = config.dst;
    } else if (s.dst.has_value()) {
      throw ConfigError("scenarios[" + std::to_string(i) +
                        "]: DST settings given for a non-DST strategy");
    }
  }
}

SimHarness build_harness(const RunConfig& config) {
  SimHarness harness;
  harness.workload.distribution = config.distribution;
  harness.workload.concentration = config.concentration;
  harness.workload.block_size = config.block_size;
  harness.cluster = config.cluster;
  harness.shape = config.batch;
  harness.base_budget = config.base_budget;
  harness.base_mode = config.base_budget_mode;
  harness.base_coverage_target = config.base_coverage_target;
  harness.dst_scope = config.dst_scope;
  harness.dst = config.dst;
  harness.estimator = config.estimator;
  harness.seed = config.seed;
  harness.iterations = config.iterations;

  if (!config.table_path.empty()) {
    TableLoadResult loaded = load_table(config.table_path);
    harness.table = std::move(loaded.table);
  } else {
    CostModelSpec model = config.cost_model;
    model.block_size = config.block_size;
    harness.table =
        synthesize_table(model, config.length_bins, config.budget_grid, config.seed);
  }

  if (config.base_budget_mode == BaseBudgetMode::kFixed) {
    bool base_on_grid = false;
    for (int k : harness.table.budget_grid) base_on_grid |= (k == config.base_budget);
    if (!base_on_grid) {
      throw ConfigError("base_budget: " + std::to_string(config.base_budget) +
                        " must be one of the table's budget grid values");
    }
  }
  harness.dst.budget_grid = harness.table.budget_grid;
  if (harness.estimator.bin_edges.empty()) {
    harness.estimator.bin_edges = default_bin_edges(config.distribution.max_length);
  }
  if (harness.estimator.default_budget < harness.table.budget_grid.front() ||
      harness.estimator.default_budget > harness.table.budget_grid.back()) {
    throw ConfigError("estimator.default_budget: outside the table's budget range");
  }
  return harness;
}

}  // namespace sparsebalance
