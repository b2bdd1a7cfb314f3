// Copyright (c) 2026 The SparseBalance Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sparsebalance/dst.hpp"
#include "sparsebalance/profile_table.hpp"
#include "sparsebalance/workload.hpp"

namespace sparsebalance {

// Per-length-bin EMA of the final attention budgets produced by DST.
// bin_edges are ascending upper boundaries: bin i covers [edges[i-1], edges[i])
// (the first bin starts at 1); lengths beyond the last edge clamp to the last
// bin. Estimates start at default_budget and blend observations in with
// weight ema_alpha.
struct SparsityEstimator {
  std::vector<std::int64_t> bin_edges;
  std::vector<double> ema_budget;
  double ema_alpha = 0.2;
  double default_budget = 32.0;
  std::vector<int> budget_grid;
};

SparsityEstimator make_estimator(std::vector<std::int64_t> bin_edges, std::vector<int> budget_grid,
                                 double ema_alpha, double default_budget);

// Power-of-two upper bin boundaries from 1024 to just past max_length.
std::vector<std::int64_t> default_bin_edges(std::int64_t max_length);

// Nearest grid budget by absolute difference; ties prefer the smaller budget.
int nearest_grid_budget(std::span<const int> grid, double value);

std::size_t estimator_bin(const SparsityEstimator& est, std::int64_t length);

// EMA of the containing bin rounded to the nearest grid budget.
int estimate_sparsity(const SparsityEstimator& est, std::int64_t length);

// Folds each decision's k_final into the length bin of the matching token
// count, in decision order.
void calibrate(SparsityEstimator& est, std::span<const BudgetDecision> decisions,
               std::span<const std::int64_t> lengths);

// W[i] = predict(length_i, estimated budget for length_i).
std::vector<double> compute_weights(std::span<const Sample> samples,
                                    const SparsityEstimator& est, const ProfileTable& table);

// Balanced partition: LPT greedy (sort descending, assign to the lightest
// eligible bin, ties to the lowest bin index) followed by a bounded
// pairwise-swap improvement pass minimizing the max bin load. When
// max_items_per_bin > 0 each bin holds at most that many items.
// Returns per-bin lists of input indices. Deterministic.
std::vector<std::vector<int>> bin_packing(std::span<const double> weights, int num_bins,
                                          int max_items_per_bin = 0);

struct PlanShape {
  int gbs = 16;  // samples per optimizer step across all ranks
  int mbs = 2;   // samples per micro-batch
  int dp = 2;    // DP rank count
};

void validate_plan_shape(const PlanShape& shape);

// Sparsity-aware batching: level 1 packs samples into dp bins of exactly
// gbs/dp samples by estimated-latency weight; level 2 packs each rank's
// samples into micro-batches of exactly mbs samples.
PackingPlan plan_batching(std::span<const Sample> batch, const PlanShape& shape,
                          const SparsityEstimator& est, const ProfileTable& table);

// Length-based batching baseline: same planner with W[i] = length_i.
PackingPlan plan_lbb(std::span<const Sample> batch, const PlanShape& shape);

// No balancing: samples in input order, chunked contiguously into ranks and
// micro-batches (the naive dataloader split).
PackingPlan plan_sequential(std::span<const Sample> batch, const PlanShape& shape);

// JSON: ranks -> micro-batches -> sample ids, plus the per-sample weights.
void save_plan_json(const PackingPlan& plan, const std::string& path);

}  // namespace sparsebalance
