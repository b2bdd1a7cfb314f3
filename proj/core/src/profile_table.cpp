// Copyright (c) 2026 The SparseBalance Authors
// SPDX-License-Identifier: Apache-2.0

#include "sparsebalance/profile_table.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string_view>

#include "sparsebalance/errors.hpp"
#include "sparsebalance/log.hpp"
#include "sparsebalance/rng.hpp"

namespace sparsebalance {

namespace {

// Position of x within the grid: returns (index of left neighbor, fraction t
// in [0,1] toward the right neighbor, clamped flag).
struct GridPos {
  std::size_t lo = 0;
  double t = 0.0;
  bool clamped = false;
};

template <typename T>
GridPos locate(const std::vector<T>& grid, double value) {
  GridPos pos;
  // Single-point axes degenerate to a clamp (no neighbor to interpolate with).
  if (grid.size() == 1 || value <= static_cast<double>(grid.front())) {
    pos.lo = 0;
    pos.t = 0.0;
    pos.clamped = value < static_cast<double>(grid.front()) ||
                  value > static_cast<double>(grid.back());
    return pos;
  }
  if (value >= static_cast<double>(grid.back())) {
    pos.lo = grid.size() - 2;
    pos.t = 1.0;
    pos.clamped = value > static_cast<double>(grid.back());
    return pos;
  }
  auto it = std::upper_bound(grid.begin(), grid.end(), static_cast<T>(value));
  pos.lo = static_cast<std::size_t>(it - grid.begin()) - 1;
  double lo = static_cast<double>(grid[pos.lo]);
  double hi = static_cast<double>(grid[pos.lo + 1]);
  pos.t = (value - lo) / (hi - lo);
  return pos;
}

// Exact endpoints at t=0/1 so grid hits return table values bit-exactly.
double lerp_exact(double lo, double hi, double t) {
  if (t == 0.0) return lo;
  if (t == 1.0) return hi;
  return lo + (hi - lo) * t;
}

}  // namespace

void validate_cost_model(const CostModelSpec& model) {
  if (model.c_lin < 0.0) throw ConfigError("cost_model.c_lin: must be >= 0");
  if (model.c_attn < 0.0) throw ConfigError("cost_model.c_attn: must be >= 0");
  if (model.c_fixed < 0.0) throw ConfigError("cost_model.c_fixed: must be >= 0");
  if (model.noise_sigma < 0.0) throw ConfigError("cost_model.noise_sigma: must be >= 0");
  if (model.block_size < 1) throw ConfigError("cost_model.block_size: must be >= 1");
  if (model.c_lin == 0.0 && model.c_attn == 0.0 && model.c_fixed == 0.0) {
    throw ConfigError("cost_model: latencies must be positive (all coefficients are zero)");
  }
}

void validate_table(const ProfileTable& table) {
  if (table.length_bins.size() < 2) {
    throw ConfigError("profile table: need at least 2 length bins");
  }
  if (table.budget_grid.size() < 2) {
    throw ConfigError("profile table: need at least 2 budget grid points");
  }
  for (std::size_t i = 1; i < table.length_bins.size(); ++i) {
    if (table.length_bins[i] <= table.length_bins[i - 1]) {
      throw ConfigError("profile table: length bins must be strictly ascending");
    }
  }
  if (table.length_bins.front() < 1) {
    throw ConfigError("profile table: length bins must be >= 1");
  }
  for (std::size_t i = 1; i < table.budget_grid.size(); ++i) {
    if (table.budget_grid[i] <= table.budget_grid[i - 1]) {
      throw ConfigError("profile table: budget grid must be strictly ascending");
    }
  }
  if (table.budget_grid.front() < 1) {
    throw ConfigError("profile table: budgets must be >= 1");
  }
  if (table.latency_ms.size() != table.length_bins.size() * table.budget_grid.size()) {
    throw ConfigError("profile table: latency matrix shape mismatch");
  }
  for (double v : table.latency_ms) {
    if (!std::isfinite(v) || v <= 0.0) {
      throw ConfigError("profile table: latencies must be finite and > 0");
    }
  }
}

LatencyEstimate predict(const ProfileTable& table, std::int64_t x, int k) {
  GridPos px = locate(table.length_bins, static_cast<double>(x));
  GridPos pk = locate(table.budget_grid, static_cast<double>(k));
  std::size_t xhi = std::min(px.lo + 1, table.length_bins.size() - 1);
  std::size_t khi = std::min(pk.lo + 1, table.budget_grid.size() - 1);
  double v00 = table.at(px.lo, pk.lo);
  double v01 = table.at(px.lo, khi);
  double v10 = table.at(xhi, pk.lo);
  double v11 = table.at(xhi, khi);
  double lo = lerp_exact(v00, v01, pk.t);
  double hi = lerp_exact(v10, v11, pk.t);
  LatencyEstimate est;
  est.value_ms = lerp_exact(lo, hi, px.t);
  est.extrapolated = px.clamped || pk.clamped;
  return est;
}

AlignResult align(const ProfileTable& table, std::int64_t x, double target_ms) {
  // predict is non-decreasing in k at fixed x (tables are isotonic in k),
  // so binary search for the last feasible grid budget.
  const auto& grid = table.budget_grid;
  std::size_t lo = 0;
  std::size_t hi = grid.size();  // first infeasible index
  if (predict(table, x, grid.front()).value_ms > target_ms) {
    return AlignResult{grid.front(), true};
  }
  while (hi - lo > 1) {
    std::size_t mid = lo + (hi - lo) / 2;
    if (predict(table, x, grid[mid]).value_ms <= target_ms) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return AlignResult{grid[lo], false};
}

ProfileTable synthesize_table(const CostModelSpec& model, std::vector<std::int64_t> length_bins,
                              std::vector<int> budget_grid, std::uint64_t seed) {
  validate_cost_model(model);
  ProfileTable table;
  table.length_bins = std::move(length_bins);
  table.budget_grid = std::move(budget_grid);
  table.latency_ms.resize(table.length_bins.size() * table.budget_grid.size());

  Rng rng(mix_seed(seed, 0x7ab1e));
  for (std::size_t xi = 0; xi < table.length_bins.size(); ++xi) {
    double x = static_cast<double>(table.length_bins[xi]);
    for (std::size_t ki = 0; ki < table.budget_grid.size(); ++ki) {
      double attended =
          std::min(static_cast<double>(table.budget_grid[ki]) * model.block_size, x);
      double cell = model.c_lin * x + model.c_attn * x * attended + model.c_fixed;
      if (model.noise_sigma > 0.0) cell *= rng.lognormal(0.0, model.noise_sigma);
      table.at(xi, ki) = cell;
    }
  }
  validate_table(table);
  return table;
}

void save_table(const ProfileTable& table, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write profile table: " + path);
  out << "x,k,latency_ms\n";
  char buf[160];
  for (std::size_t xi = 0; xi < table.length_bins.size(); ++xi) {
    for (std::size_t ki = 0; ki < table.budget_grid.size(); ++ki) {
      std::snprintf(buf, sizeof(buf), "%lld,%d,%.17g\n",
                    static_cast<long long>(table.length_bins[xi]), table.budget_grid[ki],
                    table.at(xi, ki));
      out << buf;
    }
  }
  if (!out) throw std::runtime_error("failed writing profile table: " + path);
}

TableLoadResult load_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("profile table not readable: " + path);

  std::string line;
  int line_no = 0;
  if (!std::getline(in, line)) throw ConfigError(path + ": empty profile table file");
  ++line_no;
  {
    std::string_view header(line);
    if (!header.empty() && header.back() == '\r') header.remove_suffix(1);
    if (header != "x,k,latency_ms") {
      throw ConfigError(path + ":1: expected header 'x,k,latency_ms'");
    }
  }

  std::map<std::pair<std::int64_t, int>, double> cells;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view sv(line);
    if (!sv.empty() && sv.back() == '\r') sv.remove_suffix(1);
    if (sv.empty()) continue;
    std::int64_t x = 0;
    int k = 0;
    double v = 0.0;
    char c1 = 0, c2 = 0;
    std::istringstream row{std::string(sv)};
    if (!(row >> x >> c1 >> k >> c2 >> v) || c1 != ',' || c2 != ',' ||
        (row >> std::ws, !row.eof())) {
      throw ConfigError(path + ":" + std::to_string(line_no) +
                        ": malformed row (expected x,k,latency_ms): " + line);
    }
    auto key = std::make_pair(x, k);
    if (!cells.emplace(key, v).second) {
      throw ConfigError(path + ":" + std::to_string(line_no) + ": duplicate cell (x=" +
                        std::to_string(x) + ", k=" + std::to_string(k) + ")");
    }
  }
  if (cells.empty()) throw ConfigError(path + ": profile table has no rows");

  TableLoadResult result;
  ProfileTable& table = result.table;
  for (const auto& [key, value] : cells) {
    (void)value;
    table.length_bins.push_back(key.first);
    table.budget_grid.push_back(key.second);
  }
  std::sort(table.length_bins.begin(), table.length_bins.end());
  table.length_bins.erase(std::unique(table.length_bins.begin(), table.length_bins.end()),
                          table.length_bins.end());
  std::sort(table.budget_grid.begin(), table.budget_grid.end());
  table.budget_grid.erase(std::unique(table.budget_grid.begin(), table.budget_grid.end()),
                          table.budget_grid.end());

  table.latency_ms.assign(table.length_bins.size() * table.budget_grid.size(), 0.0);
  for (std::size_t xi = 0; xi < table.length_bins.size(); ++xi) {
    for (std::size_t ki = 0; ki < table.budget_grid.size(); ++ki) {
      auto it = cells.find({table.length_bins[xi], table.budget_grid[ki]});
      if (it == cells.end()) {
        throw ConfigError(path + ": non-rectangular grid, missing cell (x=" +
                          std::to_string(table.length_bins[xi]) +
                          ", k=" + std::to_string(table.budget_grid[ki]) + ")");
      }
      table.at(xi, ki) = it->second;
    }
  }

  // Isotonic repair: align() requires latencies non-decreasing in k, but
  // measured profiles can be noisy. Repair upward to the running max.
  for (std::size_t xi = 0; xi < table.length_bins.size(); ++xi) {
    double running = 0.0;
    for (std::size_t ki = 0; ki < table.budget_grid.size(); ++ki) {
      running = std::max(running, table.at(xi, ki));
      if (table.at(xi, ki) < running) {
        table.at(xi, ki) = running;
        result.repaired = true;
        ++result.repaired_cells;
      }
    }
  }
  if (result.repaired) {
    log_info() << "profile table " << path << ": isotonic repair changed "
               << result.repaired_cells << " cells";
  }
  validate_table(table);
  return result;
}

std::vector<std::int64_t> default_length_bins() {
  return {256,   512,   1024,  2048,  4096,  8192,   16384,  24576,
          32768, 49152, 65536, 98304, 131072, 196608, 262144};
}

std::vector<int> default_budget_grid() {
  return {1, 2, 3, 4, 6, 8, 10, 12, 16, 20, 24, 32, 40, 48, 56, 64};
}

}  // namespace sparsebalance
