// Copyright (c) 2026 The SparseBalance Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace sparsebalance {

// (length-bin x budget) -> per-layer latency lookup grid. Immutable once
// built; predict/align are pure and safe to call concurrently.
struct ProfileTable {
  std::vector<std::int64_t> length_bins;  // strictly ascending, size >= 2
  std::vector<int> budget_grid;           // strictly ascending, size >= 2
  std::vector<double> latency_ms;         // row-major [length_bin][budget]

  double at(std::size_t xi, std::size_t ki) const {
    return latency_ms[xi * budget_grid.size() + ki];
  }
  double& at(std::size_t xi, std::size_t ki) {
    return latency_ms[xi * budget_grid.size() + ki];
  }
};

// Throws ConfigError if the grid shape or cell values are invalid.
void validate_table(const ProfileTable& table);

struct LatencyEstimate {
  double value_ms = 0.0;
  bool extrapolated = false;  // query fell outside the grid and was edge-clamped
};

struct AlignResult {
  int budget = 0;
  bool infeasible = false;  // no grid budget met the target; budget = min grid
};

// Synthetic stand-in for hardware profiling:
//   cell(x, k) = c_lin*x + c_attn*x*min(k*block_size, x) + c_fixed,
// optionally multiplied by LogNormal(0, noise_sigma) noise. Defaults make the
// attention term dominate at long context, so realized cost tracks the
// resolved block budget rather than raw sequence length.
struct CostModelSpec {
  double c_lin = 2e-6;
  double c_attn = 6e-8;
  double c_fixed = 0.15;
  double noise_sigma = 0.0;
  int block_size = 256;
};

void validate_cost_model(const CostModelSpec& model);

// Exact table value on grid points; bilinear interpolation between them;
// edge clamp with extrapolated=true outside the grid.
LatencyEstimate predict(const ProfileTable& table, std::int64_t x, int k);

// Largest grid budget whose predicted latency is <= target_ms; min grid
// budget with infeasible=true when none qualifies.
AlignResult align(const ProfileTable& table, std::int64_t x, double target_ms);

ProfileTable synthesize_table(const CostModelSpec& model, std::vector<std::int64_t> length_bins,
                              std::vector<int> budget_grid, std::uint64_t seed);

struct TableLoadResult {
  ProfileTable table;
  bool repaired = false;  // isotonic repair in k changed at least one cell
  int repaired_cells = 0;
};

// CSV schema: header `x,k,latency_ms`, one row per grid cell, any row order.
void save_table(const ProfileTable& table, const std::string& path);
TableLoadResult load_table(const std::string& path);

// Default grids: token-count bins up to 256K and 16 candidate budgets.
std::vector<std::int64_t> default_length_bins();
std::vector<int> default_budget_grid();

}  // namespace sparsebalance
