// Copyright (c) 2026 The SparseBalance Authors
// SPDX-License-Identifier: Apache-2.0

#include "sparsebalance/sab.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "sparsebalance/errors.hpp"

namespace sparsebalance {

namespace {
constexpr int kSwapSweeps = 2;
}

SparsityEstimator make_estimator(std::vector<std::int64_t> bin_edges, std::vector<int> budget_grid,
                                 double ema_alpha, double default_budget) {
  if (bin_edges.empty()) throw ConfigError("estimator.bin_edges: must be non-empty");
  for (std::size_t i = 0; i < bin_edges.size(); ++i) {
    if (bin_edges[i] < 2) throw ConfigError("estimator.bin_edges: edges must be >= 2");
    if (i > 0 && bin_edges[i] <= bin_edges[i - 1]) {
      throw ConfigError("estimator.bin_edges: must be strictly ascending");
    }
  }
  if (budget_grid.empty()) throw ConfigError("estimator budget grid must be non-empty");
  for (std::size_t i = 1; i < budget_grid.size(); ++i) {
    if (budget_grid[i] <= budget_grid[i - 1]) {
      throw ConfigError("estimator budget grid must be strictly ascending");
    }
  }
  if (ema_alpha <= 0.0 || ema_alpha > 1.0) {
    throw ConfigError("estimator.ema_alpha: must be in (0,1]");
  }
  if (default_budget < static_cast<double>(budget_grid.front()) ||
      default_budget > static_cast<double>(budget_grid.back())) {
    throw ConfigError("estimator.default_budget: must lie within the budget grid range");
  }

  SparsityEstimator est;
  est.bin_edges = std::move(bin_edges);
  est.budget_grid = std::move(budget_grid);
  est.ema_alpha = ema_alpha;
  est.default_budget = default_budget;
  est.ema_budget.assign(est.bin_edges.size(), default_budget);
  return est;
}

std::vector<std::int64_t> default_bin_edges(std::int64_t max_length) {
  std::vector<std::int64_t> edges;
  std::int64_t e = 1024;
  while (e <= max_length) {
    edges.push_back(e);
    e *= 2;
  }
  edges.push_back(e);  // one bin beyond, so max_length itself is covered
  return edges;
}

int nearest_grid_budget(std::span<const int> grid, double value) {
  int best = grid.front();
  double best_dist = std::abs(value - static_cast<double>(best));
  for (int k : grid) {
    double dist = std::abs(value - static_cast<double>(k));
    if (dist < best_dist) {
      best = k;
      best_dist = dist;
    }
  }
  return best;
}

std::size_t estimator_bin(const SparsityEstimator& est, std::int64_t length) {
  for (std::size_t i = 0; i < est.bin_edges.size(); ++i) {
    if (length < est.bin_edges[i]) return i;
  }
  return est.bin_edges.size() - 1;  // beyond the last edge: clamp to last bin
}

int estimate_sparsity(const SparsityEstimator& est, std::int64_t length) {
  return nearest_grid_budget(est.budget_grid, est.ema_budget[estimator_bin(est, length)]);
}

void calibrate(SparsityEstimator& est, std::span<const BudgetDecision> decisions,
               std::span<const std::int64_t> lengths) {
  if (decisions.size() != lengths.size()) {
    throw ConfigError("calibrate: decisions and lengths must have equal size");
  }
  const double lo = static_cast<double>(est.budget_grid.front());
  const double hi = static_cast<double>(est.budget_grid.back());
  for (std::size_t i = 0; i < decisions.size(); ++i) {
    std::size_t bin = estimator_bin(est, lengths[i]);
    double blended = (1.0 - est.ema_alpha) * est.ema_budget[bin] +
                     est.ema_alpha * static_cast<double>(decisions[i].k_final);
    est.ema_budget[bin] = std::clamp(blended, lo, hi);
  }
}

std::vector<double> compute_weights(std::span<const Sample> samples,
                                    const SparsityEstimator& est, const ProfileTable& table) {
  std::vector<double> weights;
  weights.reserve(samples.size());
  for (const Sample& s : samples) {
    weights.push_back(predict(table, s.length, estimate_sparsity(est, s.length)).value_ms);
  }
  return weights;
}

namespace {

struct Bin {
  double load = 0.0;
  std::vector<int> items;
};

// Best single exchange between bins a and b, applied while it strictly lowers
// max(load_a, load_b). Exchanges preserve cardinality, so capacity holds.
bool improve_pair(std::span<const double> weights, Bin& a, Bin& b) {
  bool improved = false;
  for (;;) {
    double current = std::max(a.load, b.load);
    double best = current;
    int best_ai = -1, best_bi = -1;
    for (std::size_t ai = 0; ai < a.items.size(); ++ai) {
      for (std::size_t bi = 0; bi < b.items.size(); ++bi) {
        double delta = weights[static_cast<std::size_t>(b.items[bi])] -
                       weights[static_cast<std::size_t>(a.items[ai])];
        double candidate = std::max(a.load + delta, b.load - delta);
        if (candidate < best) {
          best = candidate;
          best_ai = static_cast<int>(ai);
          best_bi = static_cast<int>(bi);
        }
      }
    }
    if (best_ai < 0) return improved;
    std::swap(a.items[static_cast<std::size_t>(best_ai)],
              b.items[static_cast<std::size_t>(best_bi)]);
    double delta = weights[static_cast<std::size_t>(a.items[static_cast<std::size_t>(best_ai)])] -
                   weights[static_cast<std::size_t>(b.items[static_cast<std::size_t>(best_bi)])];
    a.load += delta;
    b.load -= delta;
    improved = true;
  }
}

}  // namespace

std::vector<std::vector<int>> bin_packing(std::span<const double> weights, int num_bins,
                                          int max_items_per_bin) {
  if (num_bins < 1) throw ConfigError("bin_packing: num_bins must be >= 1");
  if (weights.size() < static_cast<std::size_t>(num_bins)) {
    throw ConfigError("bin_packing: fewer items (" + std::to_string(weights.size()) +
                      ") than bins (" + std::to_string(num_bins) + ")");
  }
  if (max_items_per_bin > 0 &&
      weights.size() > static_cast<std::size_t>(num_bins) *
                           static_cast<std::size_t>(max_items_per_bin)) {
    throw ConfigError("bin_packing: " + std::to_string(weights.size()) +
                      " items exceed capacity " + std::to_string(num_bins) + " bins x " +
                      std::to_string(max_items_per_bin));
  }

  // LPT: heaviest first (stable on ties), into the lightest eligible bin.
  std::vector<int> order(weights.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int lhs, int rhs) {
    return weights[static_cast<std::size_t>(lhs)] > weights[static_cast<std::size_t>(rhs)];
  });

  std::vector<Bin> bins(static_cast<std::size_t>(num_bins));
  for (int idx : order) {
    int target = -1;
    for (int b = 0; b < num_bins; ++b) {
      const Bin& bin = bins[static_cast<std::size_t>(b)];
      if (max_items_per_bin > 0 &&
          bin.items.size() >= static_cast<std::size_t>(max_items_per_bin)) {
        continue;
      }
      if (target < 0 || bin.load < bins[static_cast<std::size_t>(target)].load) target = b;
    }
    Bin& bin = bins[static_cast<std::size_t>(target)];
    bin.items.push_back(idx);
    bin.load += weights[static_cast<std::size_t>(idx)];
  }

  for (int sweep = 0; sweep < kSwapSweeps; ++sweep) {
    bool improved = false;
    for (std::size_t a = 0; a < bins.size(); ++a) {
      for (std::size_t b = a + 1; b < bins.size(); ++b) {
        improved = improve_pair(weights, bins[a], bins[b]) || improved;
      }
    }
    if (!improved) break;
  }

  std::vector<std::vector<int>> result;
  result.reserve(bins.size());
  for (Bin& bin : bins) {
    std::sort(bin.items.begin(), bin.items.end());
    result.push_back(std::move(bin.items));
  }
  return result;
}

void validate_plan_shape(const PlanShape& shape) {
  if (shape.gbs < 1) throw ConfigError("batch.gbs: must be >= 1");
  if (shape.mbs < 1) throw ConfigError("batch.mbs: must be >= 1");
  if (shape.dp < 1) throw ConfigError("cluster.dp: must be >= 1");
  if (shape.gbs % (shape.mbs * shape.dp) != 0) {
    throw ConfigError("batch.gbs: " + std::to_string(shape.gbs) +
                      " not divisible by mbs x dp = " + std::to_string(shape.mbs) + " x " +
                      std::to_string(shape.dp));
  }
}

namespace {

PackingPlan plan_with_weights(std::span<const Sample> batch, const PlanShape& shape,
                              std::vector<double> weights) {
  validate_plan_shape(shape);
  if (batch.size() != static_cast<std::size_t>(shape.gbs)) {
    throw ConfigError("plan: batch has " + std::to_string(batch.size()) +
                      " samples, expected gbs = " + std::to_string(shape.gbs));
  }

  const int per_rank = shape.gbs / shape.dp;
  const int mbs_per_rank = per_rank / shape.mbs;

  PackingPlan plan;
  plan.sample_ids.reserve(batch.size());
  for (const Sample& s : batch) plan.sample_ids.push_back(s.id);
  plan.weights = weights;

  // Level 1: DP ranks, equal cardinality gbs/dp.
  auto dp_assignment = bin_packing(weights, shape.dp, per_rank);

  plan.dp_bins.resize(static_cast<std::size_t>(shape.dp));
  plan.micro_batch_bins.resize(static_cast<std::size_t>(shape.dp));
  for (int rank = 0; rank < shape.dp; ++rank) {
    const auto& rank_indices = dp_assignment[static_cast<std::size_t>(rank)];
    auto& dp_bin = plan.dp_bins[static_cast<std::size_t>(rank)];
    for (int idx : rank_indices) dp_bin.push_back(batch[static_cast<std::size_t>(idx)].id);

    // Level 2: micro-batches of exactly mbs samples within the rank.
    std::vector<double> rank_weights;
    rank_weights.reserve(rank_indices.size());
    for (int idx : rank_indices) rank_weights.push_back(weights[static_cast<std::size_t>(idx)]);
    auto mb_assignment = bin_packing(rank_weights, mbs_per_rank, shape.mbs);

    auto& rank_mbs = plan.micro_batch_bins[static_cast<std::size_t>(rank)];
    rank_mbs.resize(mb_assignment.size());
    for (std::size_t mb = 0; mb < mb_assignment.size(); ++mb) {
      for (int local : mb_assignment[mb]) {
        int global = rank_indices[static_cast<std::size_t>(local)];
        rank_mbs[mb].push_back(batch[static_cast<std::size_t>(global)].id);
      }
    }
  }
  return plan;
}

}  // namespace

PackingPlan plan_batching(std::span<const Sample> batch, const PlanShape& shape,
                          const SparsityEstimator& est, const ProfileTable& table) {
  return plan_with_weights(batch, shape, compute_weights(batch, est, table));
}

PackingPlan plan_lbb(std::span<const Sample> batch, const PlanShape& shape) {
  std::vector<double> weights;
  weights.reserve(batch.size());
  for (const Sample& s : batch) weights.push_back(static_cast<double>(s.length));
  return plan_with_weights(batch, shape, std::move(weights));
}

PackingPlan plan_sequential(std::span<const Sample> batch, const PlanShape& shape) {
  validate_plan_shape(shape);
  if (batch.size() != static_cast<std::size_t>(shape.gbs)) {
    throw ConfigError("plan: batch has " + std::to_string(batch.size()) +
                      " samples, expected gbs = " + std::to_string(shape.gbs));
  }
  const int per_rank = shape.gbs / shape.dp;
  const int mbs_per_rank = per_rank / shape.mbs;

  PackingPlan plan;
  for (const Sample& s : batch) {
    plan.sample_ids.push_back(s.id);
    plan.weights.push_back(static_cast<double>(s.length));
  }
  plan.dp_bins.resize(static_cast<std::size_t>(shape.dp));
  plan.micro_batch_bins.resize(static_cast<std::size_t>(shape.dp));
  for (int rank = 0; rank < shape.dp; ++rank) {
    auto& rank_mbs = plan.micro_batch_bins[static_cast<std::size_t>(rank)];
    rank_mbs.resize(static_cast<std::size_t>(mbs_per_rank));
    for (int mb = 0; mb < mbs_per_rank; ++mb) {
      for (int j = 0; j < shape.mbs; ++j) {
        std::size_t pos = static_cast<std::size_t>(rank * per_rank + mb * shape.mbs + j);
        plan.dp_bins[static_cast<std::size_t>(rank)].push_back(batch[pos].id);
        rank_mbs[static_cast<std::size_t>(mb)].push_back(batch[pos].id);
      }
    }
  }
  return plan;
}

void save_plan_json(const PackingPlan& plan, const std::string& path) {
  nlohmann::json ranks = nlohmann::json::array();
  std::unordered_map<std::int64_t, double> weight_by_id;
  for (std::size_t i = 0; i < plan.sample_ids.size(); ++i) {
    weight_by_id[plan.sample_ids[i]] = plan.weights[i];
  }
  for (const auto& rank_bins : plan.micro_batch_bins) {
    nlohmann::json mbs = nlohmann::json::array();
    for (const auto& mb_ids : rank_bins) {
      nlohmann::json ids = nlohmann::json::array();
      nlohmann::json weights = nlohmann::json::array();
      for (std::int64_t id : mb_ids) {
        ids.push_back(id);
        weights.push_back(weight_by_id.at(id));
      }
      mbs.push_back({{"sample_ids", ids}, {"weights", weights}});
    }
    ranks.push_back({{"micro_batches", mbs}});
  }
  nlohmann::json doc{{"ranks", ranks}};
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write plan json: " + path);
  out << doc.dump(2) << "\n";
  if (!out) throw std::runtime_error("failed writing plan json: " + path);
}

}  // namespace sparsebalance
