// Copyright (c) 2026 The SparseBalance Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sparsebalance/dst.hpp"
#include "sparsebalance/profile_table.hpp"
#include "sparsebalance/sab.hpp"
#include "sparsebalance/workload.hpp"

namespace sparsebalance {

struct ClusterConfig {
  int dp = 2;
  int pp = 4;
  int layers_per_stage = 9;
  double fwd_bwd_ratio = 2.0;  // backward time = ratio * forward time
  double comm_ms = 0.05;       // per-hop point-to-point activation/grad transfer
  double dp_sync_ms = 5.0;     // fixed gradient all-reduce barrier cost

  int num_layers() const { return pp * layers_per_stage; }
};

void validate_cluster(const ClusterConfig& cluster);

enum class Strategy { kBaseline, kDst, kSab, kLbb, kSabDst, kLbbDst };

// How each micro-batch's base attention budget is assigned:
//  - kFixed: the configured base_budget, uniformly.
//  - kCoverage: the budget the underlying sparse-attention method would pick,
//    i.e. the smallest grid budget whose mean-over-layers coverage reaches
//    base_coverage_target (adaptive-budget methods make sparse inputs cheap
//    at the baseline already, so budgets vary per micro-batch).
enum class BaseBudgetMode { kFixed, kCoverage };

const char* base_budget_mode_name(BaseBudgetMode mode);
BaseBudgetMode parse_base_budget_mode(const std::string& name);

// Which micro-batches share one DST anchor:
//  - kGlobal: all ranks' micro-batches are tuned in one pooled pass per layer,
//    so every rank levels toward the same target.
//  - kRank: each rank anchors on its own share (tuning adapts to whatever the
//    planner placed there).
enum class DstScope { kRank, kGlobal };

const char* dst_scope_name(DstScope scope);
DstScope parse_dst_scope(const std::string& name);

const char* strategy_name(Strategy strategy);
Strategy parse_strategy(const std::string& name);
bool strategy_uses_dst(Strategy strategy);
// Whether the strategy plans batches by weight (vs the sequential split).
bool strategy_plans_batches(Strategy strategy);

struct ScenarioSpec {
  Strategy strategy = Strategy::kBaseline;
  std::string name;                // report key; defaults to the strategy name
  std::optional<DstConfig> dst;    // required (possibly defaulted) iff strategy uses DST
  int iterations = 0;              // 0 = inherit the run-level iteration count
  std::uint64_t seed = 0;          // 0 = inherit the run-level seed (paired streams)
};

enum class Phase { kFwd, kBwd };

// Time one micro-batch spends on one pipeline stage: sum over the stage's
// layers of predict(length_descriptor, layer budget), times fwd_bwd_ratio
// for the backward phase. stage_layer_budgets has layers_per_stage entries.
double micro_batch_time(const MicroBatch& mb, std::span<const int> stage_layer_budgets,
                        const ProfileTable& table, const ClusterConfig& cluster, Phase phase);

struct PipelineResult {
  double completion_ms = 0.0;
  std::vector<double> stage_busy_ms;  // per stage, sum of executed op durations
  double bubble_ms = 0.0;             // pp * completion - total busy
  double critical_lb_ms = 0.0;        // critical-path lower bound (see sim.cpp)
};

// Non-interleaved 1F1B schedule over cluster.pp stages: each stage runs
// min(pp-1-stage, m) warmup forwards, alternates one-forward-one-backward,
// then drains remaining backwards; adjacent stages pay comm_ms per hop.
// per_mb_layer_budgets[i] holds num_layers() budgets for micro-batch i.
PipelineResult simulate_pipeline(const std::vector<MicroBatch>& rank_mbs,
                                 const std::vector<std::vector<int>>& per_mb_layer_budgets,
                                 const ProfileTable& table, const ClusterConfig& cluster);

struct ScheduleResult {
  double iter_ms = 0.0;          // max over DP ranks of pipeline completion + dp_sync_ms
  std::vector<double> per_mb_ms; // per-micro-batch fwd+bwd totals, averaged across ranks
  double max_mb_ms = 0.0;
  double mean_mb_ms = 0.0;
  double imbalance = 1.0;        // max/mean over all (rank, micro-batch) totals
  double bubble_ms = 0.0;        // summed over ranks
  double critical_lb_ms = 0.0;   // max over ranks + dp_sync_ms
  double dst_overhead_ms = 0.0;  // measured wall-clock, reported separately (not in iter_ms)
  double sab_overhead_ms = 0.0;  // measured planning wall-clock, reported separately
  double avg_budget = 0.0;       // mean final budget over (rank, micro-batch, layer)
  double mean_cov_drop = 0.0;    // mean coverage drop over DST decisions (0 without DST)
};

struct EstimatorSettings {
  std::vector<std::int64_t> bin_edges;  // empty = derive powers of two up to max length
  double ema_alpha = 0.2;
  double default_budget = 32.0;
  int calibrate_every = 1;  // calibrate from DST decisions every this many iterations
};

struct IterationSetup {
  ClusterConfig cluster;
  PlanShape shape;
  int base_budget = 32;  // used when base_mode == kFixed
  BaseBudgetMode base_mode = BaseBudgetMode::kCoverage;
  double base_coverage_target = 0.9;
  DstScope dst_scope = DstScope::kGlobal;
  DstConfig dst;  // budget_grid filled from the table; ignored unless the strategy uses DST
  int calibrate_every = 1;
};

// One optimizer step: plan (strategy-dependent) -> assemble per rank ->
// optional per-layer DST tuning -> per-rank 1F1B simulation -> DP barrier.
// The estimator is read by SAB planning and calibrated from DST decisions.
ScheduleResult simulate_iteration(std::span<const Sample> samples, Strategy strategy,
                                  const IterationSetup& setup, const ProfileTable& table,
                                  SparsityEstimator& est, int iter_index,
                                  std::vector<BudgetDecision>* decisions_out = nullptr,
                                  PackingPlan* plan_out = nullptr);

struct WorkloadSpec {
  LengthDistributionSpec distribution;
  ConcentrationSpec concentration;
  int block_size = 256;
};

// Everything shared by the scenarios of one comparison run.
struct SimHarness {
  WorkloadSpec workload;
  ProfileTable table;
  ClusterConfig cluster;
  PlanShape shape;
  int base_budget = 32;  // used when base_mode == kFixed
  BaseBudgetMode base_mode = BaseBudgetMode::kCoverage;
  double base_coverage_target = 0.9;
  DstScope dst_scope = DstScope::kGlobal;
  DstConfig dst;  // run-level default for scenarios that do not override it
  EstimatorSettings estimator;
  std::uint64_t seed = 42;
  int iterations = 50;
  int jobs = 1;  // scenario-level parallelism; results are order-independent
};

struct ScenarioStats {
  std::string name;
  Strategy strategy = Strategy::kBaseline;
  std::vector<ScheduleResult> iterations;
  double mean_iter_ms = 0.0;
  double p50_iter_ms = 0.0;
  double p90_iter_ms = 0.0;
  double mean_imbalance = 0.0;
  double mean_bubble_ms = 0.0;
  double mean_dst_overhead_ms = 0.0;
  double mean_sab_overhead_ms = 0.0;
  double mean_avg_budget = 0.0;
  double mean_cov_drop = 0.0;
  double speedup = 1.0;  // reference mean_iter_ms / this mean_iter_ms
};

struct ComparisonReport {
  std::vector<ScenarioStats> scenarios;
  std::string reference;  // scenario name speedups are normalized against
  std::uint64_t seed = 0;
};

// Runs every scenario over its own iterations. Sample streams are derived
// from (seed, iteration index) only, so scenarios with the same seed consume
// identical workloads (paired comparison). The reference is the scenario
// named "baseline" when present, else the first one.
ComparisonReport run_scenarios(const SimHarness& harness,
                               const std::vector<ScenarioSpec>& specs);

}  // namespace sparsebalance
