// Copyright (c) 2026 The SparseBalance Authors
// SPDX-License-Identifier: Apache-2.0

#include "sparsebalance/dst.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>

#include "sparsebalance/errors.hpp"

namespace sparsebalance {

const char* anchor_name(AnchorStrategy strategy) {
  switch (strategy) {
    case AnchorStrategy::kMin: return "min";
    case AnchorStrategy::kMean: return "mean";
    case AnchorStrategy::kMax: return "max";
  }
  return "?";
}

AnchorStrategy parse_anchor(const std::string& name) {
  if (name == "min") return AnchorStrategy::kMin;
  if (name == "mean") return AnchorStrategy::kMean;
  if (name == "max") return AnchorStrategy::kMax;
  throw ConfigError("dst.anchor: unknown strategy '" + name + "' (expected min|mean|max)");
}

void validate_dst_config(const DstConfig& cfg) {
  if (cfg.threshold_p < 0.0 || cfg.threshold_p > 1.0) {
    throw ConfigError("dst.threshold_p: must be in [0,1]");
  }
  if (cfg.budget_grid.empty()) throw ConfigError("dst.budget_grid: must be non-empty");
  for (std::size_t i = 1; i < cfg.budget_grid.size(); ++i) {
    if (cfg.budget_grid[i] <= cfg.budget_grid[i - 1]) {
      throw ConfigError("dst.budget_grid: must be strictly ascending");
    }
  }
  if (cfg.budget_grid.front() < 1) throw ConfigError("dst.budget_grid: budgets must be >= 1");
}

const char* direction_name(TuneDirection direction) {
  switch (direction) {
    case TuneDirection::kCompressed: return "compressed";
    case TuneDirection::kExpanded: return "expanded";
    case TuneDirection::kUnchanged: return "unchanged";
  }
  return "?";
}

double coverage(const RoutingProfile& profile, int k) {
  if (k <= 0) return 0.0;
  std::size_t take = std::min(static_cast<std::size_t>(k), profile.scores.size());
  double acc = 0.0;
  for (std::size_t j = 0; j < take; ++j) acc += profile.scores[j];
  // Selecting at least every existing block is dense attention.
  if (static_cast<std::size_t>(k) >= profile.scores.size()) return 1.0;
  return acc;
}

double select_anchor(std::span<const double> latencies_ms, AnchorStrategy strategy) {
  if (latencies_ms.empty()) {
    throw ConfigError("select_anchor: latency list must be non-empty");
  }
  switch (strategy) {
    case AnchorStrategy::kMin:
      return *std::min_element(latencies_ms.begin(), latencies_ms.end());
    case AnchorStrategy::kMax:
      return *std::max_element(latencies_ms.begin(), latencies_ms.end());
    case AnchorStrategy::kMean: {
      double total = 0.0;
      for (double v : latencies_ms) total += v;
      return total / static_cast<double>(latencies_ms.size());
    }
  }
  throw std::runtime_error("unreachable anchor strategy");
}

namespace {

// Smallest grid budget whose coverage drop from k_base is within p. Coverage
// is non-decreasing in k, so binary search for the first qualifying budget.
// Total under validated configs (k_base on the grid qualifies with drop 0);
// falls back to the densest budget if somehow nothing qualifies.
int find_feasible_k(const RoutingProfile& profile, int k_base, double p,
                    const std::vector<int>& grid) {
  double base_cov = coverage(profile, k_base);
  std::size_t lo = 0;
  std::size_t hi = grid.size() - 1;
  if (base_cov - coverage(profile, grid[hi]) > p) return grid[hi];
  if (base_cov - coverage(profile, grid[lo]) <= p) return grid[lo];
  while (hi - lo > 1) {
    std::size_t mid = lo + (hi - lo) / 2;
    if (base_cov - coverage(profile, grid[mid]) <= p) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return grid[hi];
}

}  // namespace

BudgetDecision tune_budget(const MicroBatch& mb, int layer, int k_base,
                           std::span<const double> global_latencies_ms, const DstConfig& cfg,
                           const ProfileTable& table, int micro_batch_id) {
  BudgetDecision d;
  d.micro_batch_id = micro_batch_id;
  d.layer_id = layer;
  d.k_base = k_base;

  const std::int64_t x = mb.length_descriptor;
  const double t_anchor = select_anchor(global_latencies_ms, cfg.anchor);
  d.k_anchor = align(table, x, t_anchor).budget;
  d.predicted_ms_base = predict(table, x, k_base).value_ms;

  const RoutingProfile& profile = mb.profile(static_cast<std::size_t>(layer));
  if (d.predicted_ms_base <= t_anchor) {
    // Non-bottleneck: expand into the idle time up to the anchor.
    d.k_final = d.k_anchor;
  } else if (coverage(profile, k_base) - coverage(profile, d.k_anchor) <= cfg.threshold_p) {
    // Bottleneck with a latency-feasible, coverage-safe budget: align already
    // returned the largest latency-feasible one, i.e. max of the feasible set.
    d.k_final = d.k_anchor;
  } else {
    // Feasible set empty: compress only as far as the coverage bound allows.
    d.k_final = find_feasible_k(profile, k_base, cfg.threshold_p, cfg.budget_grid);
  }

  d.coverage_drop = coverage(profile, k_base) - coverage(profile, d.k_final);
  d.predicted_ms_final = predict(table, x, d.k_final).value_ms;
  if (d.k_final < d.k_base) {
    d.direction = TuneDirection::kCompressed;
  } else if (d.k_final > d.k_base) {
    d.direction = TuneDirection::kExpanded;
  } else {
    d.direction = TuneDirection::kUnchanged;
  }
  return d;
}

TuneBatchResult tune_global_batch(const GlobalBatch& gb, int layer, const DstConfig& cfg,
                                  const ProfileTable& table) {
  if (gb.micro_batches.empty()) {
    throw ConfigError("tune_global_batch: global batch must be non-empty");
  }
  if (gb.micro_batches.size() != gb.base_budgets.size()) {
    throw ConfigError("tune_global_batch: base_budgets size mismatch");
  }

  auto start = std::chrono::steady_clock::now();
  std::vector<double> latencies(gb.micro_batches.size());
  for (std::size_t i = 0; i < gb.micro_batches.size(); ++i) {
    latencies[i] =
        predict(table, gb.micro_batches[i].length_descriptor, gb.base_budgets[i]).value_ms;
  }
  TuneBatchResult result;
  result.decisions.reserve(gb.micro_batches.size());
  for (std::size_t i = 0; i < gb.micro_batches.size(); ++i) {
    result.decisions.push_back(tune_budget(gb.micro_batches[i], layer, gb.base_budgets[i],
                                           latencies, cfg, table, static_cast<int>(i)));
  }
  auto stop = std::chrono::steady_clock::now();
  result.overhead_ms = std::chrono::duration<double, std::milli>(stop - start).count();
  return result;
}

void write_decisions_csv(std::span<const BudgetDecision> decisions, int iter,
                         const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write decisions csv: " + path);
  out << "iter,mb,layer,k_base,k_anchor,k_final,cov_drop,dir,t_base_ms,t_final_ms\n";
  char buf[256];
  for (const BudgetDecision& d : decisions) {
    std::snprintf(buf, sizeof(buf), "%d,%d,%d,%d,%d,%d,%.6f,%s,%.6f,%.6f\n", iter,
                  d.micro_batch_id, d.layer_id, d.k_base, d.k_anchor, d.k_final,
                  d.coverage_drop, direction_name(d.direction), d.predicted_ms_base,
                  d.predicted_ms_final);
    out << buf;
  }
  if (!out) throw std::runtime_error("failed writing decisions csv: " + path);
}

}  // namespace sparsebalance
