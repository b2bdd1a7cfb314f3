// Copyright (c) 2026 The SparseBalance Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sparsebalance/sim.hpp"

namespace sparsebalance {

// Full run description, serialized as JSON. validate_run_config() enforces
// cross-field consistency and materializes per-scenario defaults.
struct RunConfig {
  std::uint64_t seed = 42;
  int iterations = 50;
  int block_size = 256;
  int base_budget = 32;  // used when base_budget_mode == kFixed
  BaseBudgetMode base_budget_mode = BaseBudgetMode::kCoverage;
  double base_coverage_target = 0.9;
  DstScope dst_scope = DstScope::kGlobal;

  ClusterConfig cluster;
  PlanShape batch;  // batch.dp must equal cluster.dp

  LengthDistributionSpec distribution;
  ConcentrationSpec concentration;

  // Table source: a CSV path, or a cost model + grids to synthesize from.
  std::string table_path;
  CostModelSpec cost_model;
  std::vector<std::int64_t> length_bins;
  std::vector<int> budget_grid;

  DstConfig dst;  // run-level default; budget_grid is filled from the table
  EstimatorSettings estimator;

  std::vector<ScenarioSpec> scenarios;

  bool emit_svg = true;
  bool dump_plans = false;  // write each scenario's first-iteration plan JSON
};

RunConfig default_run_config();

nlohmann::json run_config_to_json(const RunConfig& config);
RunConfig run_config_from_json(const nlohmann::json& j);

RunConfig load_run_config(const std::string& path);
void save_run_config(const RunConfig& config, const std::string& path);

// Throws ConfigError naming the offending field. Fills scenario defaults
// (names, iteration counts, DST configs) and checks divisibility and
// grid-membership constraints that do not need the table yet.
void validate_run_config(RunConfig& config);

// Loads or synthesizes the table, completes table-dependent validation
// (base budget on the grid, DST grid = table grid), and assembles the
// harness consumed by run_scenarios.
SimHarness build_harness(const RunConfig& config);

}  // namespace sparsebalance
