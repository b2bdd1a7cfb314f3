// Copyright (c) 2026 The SparseBalance Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <string>
#include <vector>

#include "sparsebalance/profile_table.hpp"
#include "sparsebalance/workload.hpp"

namespace sparsebalance {

enum class AnchorStrategy { kMin, kMean, kMax };

const char* anchor_name(AnchorStrategy strategy);
AnchorStrategy parse_anchor(const std::string& name);

struct DstConfig {
  double threshold_p = 0.1;                   // max permitted coverage drop, in [0,1]
  AnchorStrategy anchor = AnchorStrategy::kMin;
  std::vector<int> budget_grid;               // ascending candidate budgets
};

void validate_dst_config(const DstConfig& cfg);

enum class TuneDirection { kCompressed, kExpanded, kUnchanged };

const char* direction_name(TuneDirection direction);

struct BudgetDecision {
  int micro_batch_id = 0;
  int layer_id = 0;
  int k_base = 0;
  int k_anchor = 0;
  int k_final = 0;
  double coverage_drop = 0.0;  // coverage(k_base) - coverage(k_final)
  TuneDirection direction = TuneDirection::kUnchanged;
  double predicted_ms_base = 0.0;
  double predicted_ms_final = 0.0;
};

// Cumulative score coverage: sum of the min(k, m) largest scores; 0 at k=0,
// 1 at k >= m (selecting more blocks than exist is dense attention).
double coverage(const RoutingProfile& profile, int k);

// min / arithmetic mean / max of the predicted latencies.
double select_anchor(std::span<const double> latencies_ms, AnchorStrategy strategy);

// One budget decision for one micro-batch at one layer.
//   - T_anchor from the shared base-budget latency list; k_anchor = align(x, T_anchor).
//   - Non-bottleneck (base latency <= T_anchor): k_final = k_anchor (expansion or no-op).
//   - Bottleneck: k_final = k_anchor when its coverage drop is within threshold_p,
//     otherwise the smallest grid budget whose drop is within threshold_p
//     (coverage safety takes priority when no budget meets both constraints).
BudgetDecision tune_budget(const MicroBatch& mb, int layer, int k_base,
                           std::span<const double> global_latencies_ms, const DstConfig& cfg,
                           const ProfileTable& table, int micro_batch_id = 0);

struct TuneBatchResult {
  std::vector<BudgetDecision> decisions;  // one per micro-batch
  double overhead_ms = 0.0;               // wall-clock of the tuning computation
};

// Applies tune_budget to every micro-batch of the rank's global batch at one
// layer, with the anchor computed once from the batch's base-budget latencies.
TuneBatchResult tune_global_batch(const GlobalBatch& gb, int layer, const DstConfig& cfg,
                                  const ProfileTable& table);

// CSV schema: `iter,mb,layer,k_base,k_anchor,k_final,cov_drop,dir,t_base_ms,t_final_ms`.
void write_decisions_csv(std::span<const BudgetDecision> decisions, int iter,
                         const std::string& path);

}  // namespace sparsebalance
