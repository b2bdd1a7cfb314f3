// Copyright (c) 2026 The SparseBalance Authors
// SPDX-License-Identifier: Apache-2.0

#include "sparsebalance/sim.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "sparsebalance/errors.hpp"
#include "sparsebalance/log.hpp"
#include "sparsebalance/parallel.hpp"

namespace sparsebalance {

void validate_cluster(const ClusterConfig& cluster) {
  if (cluster.dp < 1) throw ConfigError("cluster.dp: must be >= 1");
  if (cluster.pp < 1) throw ConfigError("cluster.pp: must be >= 1");
  if (cluster.layers_per_stage < 1) throw ConfigError("cluster.layers_per_stage: must be >= 1");
  if (cluster.fwd_bwd_ratio <= 0.0) throw ConfigError("cluster.fwd_bwd_ratio: must be > 0");
  if (cluster.comm_ms < 0.0) throw ConfigError("cluster.comm_ms: must be >= 0");
  if (cluster.dp_sync_ms < 0.0) throw ConfigError("cluster.dp_sync_ms: must be >= 0");
}

const char* strategy_name(Strategy strategy) {
  switch (strategy) {
    case Strategy::kBaseline: return "baseline";
    case Strategy::kDst: return "dst";
    case Strategy::kSab: return "sab";
    case Strategy::kLbb: return "lbb";
    case Strategy::kSabDst: return "sab_dst";
    case Strategy::kLbbDst: return "lbb_dst";
  }
  return "?";
}

Strategy parse_strategy(const std::string& name) {
  if (name == "baseline") return Strategy::kBaseline;
  if (name == "dst") return Strategy::kDst;
  if (name == "sab") return Strategy::kSab;
  if (name == "lbb") return Strategy::kLbb;
  if (name == "sab_dst") return Strategy::kSabDst;
  if (name == "lbb_dst") return Strategy::kLbbDst;
  throw ConfigError("scenario.strategy: unknown strategy '" + name +
                    "' (expected baseline|dst|sab|lbb|sab_dst|lbb_dst)");
}

bool strategy_uses_dst(Strategy strategy) {
  return strategy == Strategy::kDst || strategy == Strategy::kSabDst ||
         strategy == Strategy::kLbbDst;
}

const char* base_budget_mode_name(BaseBudgetMode mode) {
  switch (mode) {
    case BaseBudgetMode::kFixed: return "fixed";
    case BaseBudgetMode::kCoverage: return "coverage";
  }
  return "?";
}

BaseBudgetMode parse_base_budget_mode(const std::string& name) {
  if (name == "fixed") return BaseBudgetMode::kFixed;
  if (name == "coverage") return BaseBudgetMode::kCoverage;
  throw ConfigError("base_budget_mode: unknown mode '" + name +
                    "' (expected fixed|coverage)");
}

const char* dst_scope_name(DstScope scope) {
  switch (scope) {
    case DstScope::kRank: return "rank";
    case DstScope::kGlobal: return "global";
  }
  return "?";
}

DstScope parse_dst_scope(const std::string& name) {
  if (name == "rank") return DstScope::kRank;
  if (name == "global") return DstScope::kGlobal;
  throw ConfigError("dst_scope: unknown scope '" + name + "' (expected rank|global)");
}

bool strategy_plans_batches(Strategy strategy) {
  return strategy == Strategy::kSab || strategy == Strategy::kLbb ||
         strategy == Strategy::kSabDst || strategy == Strategy::kLbbDst;
}

double micro_batch_time(const MicroBatch& mb, std::span<const int> stage_layer_budgets,
                        const ProfileTable& table, const ClusterConfig& cluster, Phase phase) {
  if (stage_layer_budgets.size() != static_cast<std::size_t>(cluster.layers_per_stage)) {
    throw ConfigError("micro_batch_time: expected one budget per layer in the stage");
  }
  double total = 0.0;
  for (int k : stage_layer_budgets) {
    total += predict(table, mb.length_descriptor, k).value_ms;
  }
  return phase == Phase::kBwd ? total * cluster.fwd_bwd_ratio : total;
}

namespace {

// Critical-path lower bounds for the 1F1B dependency graph. Four valid bounds
// are combined; each is implied by a chain of schedule dependencies:
//   L0: any stage must serially execute all of its own work.
//   L1: stage s cannot start before micro-batch 0's forward reaches it, and
//       micro-batch m-1's backward must travel back from it afterwards.
//   L2: one micro-batch's forward+backward round trip through all stages.
//   L3: pick a straggler i*. Stage 0 runs forwards 0..i* in order before i*'s
//       forward leaves; i* round-trips through stages 1..pp-1; backwards
//       i*..m-1 then run on stage 0 in order. This is the "straggler occupies
//       the pipeline while the rest queue behind it" path and is the
//       operational form of the T_max x PP + sum(T_other) bound; the naive
//       reading of that formula can exceed the true optimum, so the
//       dependency-derived form is used instead.
double critical_lower_bound(const std::vector<std::vector<double>>& fwd,
                            const std::vector<std::vector<double>>& bwd, int pp,
                            double comm_ms) {
  const std::size_t m = fwd.size();
  const auto pps = static_cast<std::size_t>(pp);
  double bound = 0.0;

  for (std::size_t s = 0; s < pps; ++s) {  // L0
    double busy = 0.0;
    for (std::size_t i = 0; i < m; ++i) busy += fwd[i][s] + bwd[i][s];
    bound = std::max(bound, busy);
  }

  for (std::size_t s = 0; s < pps; ++s) {  // L1
    double head = 0.0, tail = 0.0, busy = 0.0;
    for (std::size_t q = 0; q < s; ++q) {
      head += fwd[0][q];
      tail += bwd[m - 1][q];
    }
    for (std::size_t i = 0; i < m; ++i) busy += fwd[i][s] + bwd[i][s];
    bound = std::max(bound, head + busy + tail + 2.0 * static_cast<double>(s) * comm_ms);
  }

  const double round_trip_comm = 2.0 * static_cast<double>(pp - 1) * comm_ms;
  for (std::size_t i = 0; i < m; ++i) {  // L2
    double trip = round_trip_comm;
    for (std::size_t s = 0; s < pps; ++s) trip += fwd[i][s] + bwd[i][s];
    bound = std::max(bound, trip);
  }

  // L3: prefix of forwards on stage 0, round trip of i* through later stages,
  // suffix of backwards on stage 0.
  double fwd_prefix = 0.0;
  std::vector<double> bwd_suffix(m + 1, 0.0);
  for (std::size_t i = m; i-- > 0;) bwd_suffix[i] = bwd_suffix[i + 1] + bwd[i][0];
  for (std::size_t i = 0; i < m; ++i) {
    fwd_prefix += fwd[i][0];
    double trip = round_trip_comm;
    for (std::size_t s = 1; s < pps; ++s) trip += fwd[i][s] + bwd[i][s];
    bound = std::max(bound, fwd_prefix + trip + bwd_suffix[i]);
  }
  return bound;
}

struct StageOp {
  Phase phase;
  std::size_t mb;
};

std::vector<StageOp> stage_op_sequence(std::size_t m, int pp, int stage) {
  // Non-interleaved 1F1B: warmup forwards, steady 1F1B pairs, cooldown backwards.
  std::size_t warmup = std::min(static_cast<std::size_t>(pp - 1 - stage), m);
  std::vector<StageOp> ops;
  ops.reserve(2 * m);
  for (std::size_t i = 0; i < warmup; ++i) ops.push_back({Phase::kFwd, i});
  for (std::size_t i = 0; i + warmup < m; ++i) {
    ops.push_back({Phase::kFwd, warmup + i});
    ops.push_back({Phase::kBwd, i});
  }
  for (std::size_t i = m - warmup; i < m; ++i) ops.push_back({Phase::kBwd, i});
  return ops;
}

}  // namespace

PipelineResult simulate_pipeline(const std::vector<MicroBatch>& rank_mbs,
                                 const std::vector<std::vector<int>>& per_mb_layer_budgets,
                                 const ProfileTable& table, const ClusterConfig& cluster) {
  validate_cluster(cluster);
  if (rank_mbs.empty()) throw ConfigError("simulate_pipeline: need at least one micro-batch");
  if (per_mb_layer_budgets.size() != rank_mbs.size()) {
    throw ConfigError("simulate_pipeline: budgets per micro-batch mismatch");
  }
  const std::size_t m = rank_mbs.size();
  const int pp = cluster.pp;
  const int lps = cluster.layers_per_stage;
  const auto num_layers = static_cast<std::size_t>(cluster.num_layers());

  // Per (micro-batch, stage) execution times from the per-layer budgets.
  std::vector<std::vector<double>> fwd(m), bwd(m);
  for (std::size_t i = 0; i < m; ++i) {
    const auto& budgets = per_mb_layer_budgets[i];
    if (budgets.size() != num_layers) {
      throw ConfigError("simulate_pipeline: expected one budget per model layer");
    }
    fwd[i].resize(static_cast<std::size_t>(pp));
    bwd[i].resize(static_cast<std::size_t>(pp));
    for (int s = 0; s < pp; ++s) {
      std::span<const int> slice(budgets.data() + static_cast<std::size_t>(s) * lps,
                                 static_cast<std::size_t>(lps));
      fwd[i][static_cast<std::size_t>(s)] =
          micro_batch_time(rank_mbs[i], slice, table, cluster, Phase::kFwd);
      bwd[i][static_cast<std::size_t>(s)] =
          micro_batch_time(rank_mbs[i], slice, table, cluster, Phase::kBwd);
    }
  }

  // Event-driven execution: each stage consumes its fixed op sequence as
  // dependencies (previous op on the stage; upstream forward / downstream
  // backward + comm hop) become available.
  constexpr double kUnset = -1.0;
  std::vector<std::vector<double>> fwd_end(m, std::vector<double>(static_cast<std::size_t>(pp), kUnset));
  std::vector<std::vector<double>> bwd_end(m, std::vector<double>(static_cast<std::size_t>(pp), kUnset));
  std::vector<std::vector<StageOp>> ops(static_cast<std::size_t>(pp));
  std::vector<std::size_t> cursor(static_cast<std::size_t>(pp), 0);
  std::vector<double> stage_free(static_cast<std::size_t>(pp), 0.0);
  std::vector<double> stage_busy(static_cast<std::size_t>(pp), 0.0);
  for (int s = 0; s < pp; ++s) ops[static_cast<std::size_t>(s)] = stage_op_sequence(m, pp, s);

  std::size_t remaining = 2 * m * static_cast<std::size_t>(pp);
  while (remaining > 0) {
    bool progressed = false;
    for (int s = 0; s < pp; ++s) {
      auto si = static_cast<std::size_t>(s);
      while (cursor[si] < ops[si].size()) {
        const StageOp& op = ops[si][cursor[si]];
        double ready = 0.0;
        if (op.phase == Phase::kFwd) {
          if (s > 0) {
            double upstream = fwd_end[op.mb][si - 1];
            if (upstream == kUnset) break;
            ready = upstream + cluster.comm_ms;
          }
        } else {
          if (s < pp - 1) {
            double downstream = bwd_end[op.mb][si + 1];
            if (downstream == kUnset) break;
            ready = downstream + cluster.comm_ms;
          } else {
            double own_fwd = fwd_end[op.mb][si];
            if (own_fwd == kUnset) break;
            ready = own_fwd;
          }
        }
        double start = std::max(stage_free[si], ready);
        double duration = op.phase == Phase::kFwd ? fwd[op.mb][si] : bwd[op.mb][si];
        double end = start + duration;
        (op.phase == Phase::kFwd ? fwd_end : bwd_end)[op.mb][si] = end;
        stage_free[si] = end;
        stage_busy[si] += duration;
        ++cursor[si];
        --remaining;
        progressed = true;
      }
    }
    if (!progressed) {
      throw std::runtime_error("simulate_pipeline: schedule deadlock (internal error)");
    }
  }

  PipelineResult result;
  result.stage_busy_ms = stage_busy;
  result.completion_ms = 0.0;
  for (int s = 0; s < pp; ++s) {
    result.completion_ms = std::max(result.completion_ms, stage_free[static_cast<std::size_t>(s)]);
  }
  double total_busy = std::accumulate(stage_busy.begin(), stage_busy.end(), 0.0);
  result.bubble_ms = static_cast<double>(pp) * result.completion_ms - total_busy;
  result.critical_lb_ms = critical_lower_bound(fwd, bwd, pp, cluster.comm_ms);
  return result;
}

ScheduleResult simulate_iteration(std::span<const Sample> samples, Strategy strategy,
                                  const IterationSetup& setup, const ProfileTable& table,
                                  SparsityEstimator& est, int iter_index,
                                  std::vector<BudgetDecision>* decisions_out,
                                  PackingPlan* plan_out) {
  validate_cluster(setup.cluster);
  validate_plan_shape(setup.shape);
  if (setup.shape.dp != setup.cluster.dp) {
    throw ConfigError("batch/cluster mismatch: plan shape dp != cluster dp");
  }
  if (samples.size() != static_cast<std::size_t>(setup.shape.gbs)) {
    throw ConfigError("simulate_iteration: got " + std::to_string(samples.size()) +
                      " samples, expected gbs = " + std::to_string(setup.shape.gbs));
  }

  const int dp = setup.cluster.dp;
  const auto num_layers = static_cast<std::size_t>(setup.cluster.num_layers());

  // 1) Batching plan (CPU-side, ahead of execution).
  PackingPlan plan;
  double sab_overhead_ms = 0.0;
  if (strategy_plans_batches(strategy)) {
    auto t0 = std::chrono::steady_clock::now();
    if (strategy == Strategy::kSab || strategy == Strategy::kSabDst) {
      plan = plan_batching(samples, setup.shape, est, table);
    } else {
      plan = plan_lbb(samples, setup.shape);
    }
    auto t1 = std::chrono::steady_clock::now();
    sab_overhead_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
  } else {
    plan = plan_sequential(samples, setup.shape);
  }
  if (plan_out != nullptr) *plan_out = plan;

  // 2) Assembly. In coverage mode the uniform fill is replaced per micro-batch
  // by the budget the underlying sparse-attention method would assign.
  std::span<const int> grid =
      setup.dst.budget_grid.empty() ? std::span<const int>(table.budget_grid)
                                    : std::span<const int>(setup.dst.budget_grid);
  std::vector<GlobalBatch> ranks;
  ranks.reserve(static_cast<std::size_t>(dp));
  for (int r = 0; r < dp; ++r) {
    GlobalBatch gb = assemble_global_batch(samples, plan, r, setup.base_budget);
    if (setup.base_mode == BaseBudgetMode::kCoverage) {
      for (std::size_t i = 0; i < gb.micro_batches.size(); ++i) {
        gb.base_budgets[i] =
            intrinsic_budget(gb.micro_batches[i], grid, setup.base_coverage_target);
      }
    }
    ranks.push_back(std::move(gb));
  }

  // 3) Budgets: base everywhere, then per-layer DST tuning when active.
  std::vector<std::vector<std::vector<int>>> budgets(static_cast<std::size_t>(dp));
  for (int r = 0; r < dp; ++r) {
    auto ri = static_cast<std::size_t>(r);
    budgets[ri].reserve(ranks[ri].micro_batches.size());
    for (int k_base : ranks[ri].base_budgets) {
      budgets[ri].push_back(std::vector<int>(num_layers, k_base));
    }
  }

  double dst_overhead_ms = 0.0;
  std::vector<BudgetDecision> decisions;
  std::vector<BudgetDecision> calib_decisions;
  std::vector<std::int64_t> calib_lengths;
  double cov_drop_total = 0.0;
  if (strategy_uses_dst(strategy)) {
    DstConfig cfg = setup.dst;
    if (cfg.budget_grid.empty()) cfg.budget_grid = table.budget_grid;
    validate_dst_config(cfg);

    // With global scope all ranks' micro-batches are tuned in one pooled pass
    // per layer, so every rank levels toward the same anchor regardless of how
    // the planner distributed the work; decision micro_batch_ids are pooled
    // indices in rank-major order. With rank scope each rank's share anchors
    // on itself.
    std::vector<GlobalBatch> groups;
    std::vector<std::vector<std::pair<int, int>>> group_origin;  // group idx -> (rank, mb)
    if (setup.dst_scope == DstScope::kGlobal) {
      GlobalBatch pooled;
      std::vector<std::pair<int, int>> origin;
      for (int r = 0; r < dp; ++r) {
        const GlobalBatch& gb = ranks[static_cast<std::size_t>(r)];
        for (std::size_t i = 0; i < gb.micro_batches.size(); ++i) {
          pooled.micro_batches.push_back(gb.micro_batches[i]);
          pooled.base_budgets.push_back(gb.base_budgets[i]);
          origin.emplace_back(r, static_cast<int>(i));
        }
      }
      groups.push_back(std::move(pooled));
      group_origin.push_back(std::move(origin));
    } else {
      for (int r = 0; r < dp; ++r) {
        groups.push_back(ranks[static_cast<std::size_t>(r)]);
        std::vector<std::pair<int, int>> origin;
        const GlobalBatch& gb = ranks[static_cast<std::size_t>(r)];
        for (std::size_t i = 0; i < gb.micro_batches.size(); ++i) {
          origin.emplace_back(r, static_cast<int>(i));
        }
        group_origin.push_back(std::move(origin));
      }
    }

    for (std::size_t g = 0; g < groups.size(); ++g) {
      const GlobalBatch& group = groups[g];

      // Calibration observations are attributed to each member sample's
      // length, since the estimator answers per-sample queries. A multi-sample
      // micro-batch's budget is a property of the merged profile, so in
      // coverage mode each member's share is the micro-batch budget scaled by
      // standalone-need / merged-need; the estimator then converges to the
      // budget the sample would get on its own instead of inheriting its
      // partners' budgets.
      std::vector<std::vector<double>> member_share(group.micro_batches.size());
      for (std::size_t i = 0; i < group.micro_batches.size(); ++i) {
        const MicroBatch& mb = group.micro_batches[i];
        member_share[i].assign(mb.samples.size(), 1.0);
        if (setup.base_mode == BaseBudgetMode::kCoverage && mb.samples.size() > 1) {
          for (std::size_t s = 0; s < mb.samples.size(); ++s) {
            MicroBatch solo = make_micro_batch({mb.samples[s]});
            int k_solo = intrinsic_budget(solo, grid, setup.base_coverage_target);
            member_share[i][s] =
                static_cast<double>(k_solo) / static_cast<double>(group.base_budgets[i]);
          }
        }
      }

      for (std::size_t layer = 0; layer < num_layers; ++layer) {
        TuneBatchResult tuned = tune_global_batch(group, static_cast<int>(layer), cfg, table);
        dst_overhead_ms += tuned.overhead_ms;
        for (const BudgetDecision& d : tuned.decisions) {
          auto mb_id = static_cast<std::size_t>(d.micro_batch_id);
          auto [rank, mb_idx] = group_origin[g][mb_id];
          budgets[static_cast<std::size_t>(rank)][static_cast<std::size_t>(mb_idx)][layer] =
              d.k_final;
          cov_drop_total += d.coverage_drop;
          // Expanded budgets fill slack toward an anchor that is endogenous to
          // the batch composition; folding them in would teach the estimator
          // the anchor rather than the sample's own need. Compressed and
          // unchanged decisions carry the coverage-structure signal.
          if (d.direction == TuneDirection::kExpanded) continue;
          const MicroBatch& mb = group.micro_batches[mb_id];
          for (std::size_t s = 0; s < mb.samples.size(); ++s) {
            BudgetDecision scaled = d;
            scaled.k_final = std::max(
                1, static_cast<int>(std::lround(d.k_final * member_share[mb_id][s])));
            calib_decisions.push_back(scaled);
            calib_lengths.push_back(mb.samples[s].length);
          }
        }
        decisions.insert(decisions.end(), tuned.decisions.begin(), tuned.decisions.end());
      }
    }
  }
  if (decisions_out != nullptr) *decisions_out = decisions;

  // 4) Per-rank pipeline + DP barrier.
  ScheduleResult result;
  result.sab_overhead_ms = sab_overhead_ms;
  result.dst_overhead_ms = dst_overhead_ms;
  double max_completion = 0.0;
  double max_critical = 0.0;
  const std::size_t mbs_per_rank = ranks.front().micro_batches.size();
  std::vector<double> per_mb_totals(mbs_per_rank, 0.0);
  double total_all = 0.0;
  double max_all = 0.0;
  std::size_t count_all = 0;
  double budget_total = 0.0;

  for (int r = 0; r < dp; ++r) {
    auto ri = static_cast<std::size_t>(r);
    PipelineResult pr =
        simulate_pipeline(ranks[ri].micro_batches, budgets[ri], table, setup.cluster);
    max_completion = std::max(max_completion, pr.completion_ms);
    max_critical = std::max(max_critical, pr.critical_lb_ms);
    result.bubble_ms += pr.bubble_ms;

    for (std::size_t i = 0; i < ranks[ri].micro_batches.size(); ++i) {
      const MicroBatch& mb = ranks[ri].micro_batches[i];
      double total = 0.0;
      for (int s = 0; s < setup.cluster.pp; ++s) {
        std::span<const int> slice(
            budgets[ri][i].data() + static_cast<std::size_t>(s) * setup.cluster.layers_per_stage,
            static_cast<std::size_t>(setup.cluster.layers_per_stage));
        total += micro_batch_time(mb, slice, table, setup.cluster, Phase::kFwd) +
                 micro_batch_time(mb, slice, table, setup.cluster, Phase::kBwd);
      }
      per_mb_totals[i] += total;
      total_all += total;
      max_all = std::max(max_all, total);
      ++count_all;
    }
    for (const auto& mb_budgets : budgets[ri]) {
      for (int k : mb_budgets) budget_total += static_cast<double>(k);
    }
  }

  result.iter_ms = max_completion + setup.cluster.dp_sync_ms;
  result.critical_lb_ms = max_critical + setup.cluster.dp_sync_ms;
  result.per_mb_ms.resize(mbs_per_rank);
  for (std::size_t i = 0; i < mbs_per_rank; ++i) {
    result.per_mb_ms[i] = per_mb_totals[i] / static_cast<double>(dp);
  }
  double mean_all = total_all / static_cast<double>(count_all);
  result.max_mb_ms = max_all;
  result.mean_mb_ms = mean_all;
  result.imbalance = mean_all > 0.0 ? max_all / mean_all : 1.0;
  result.avg_budget =
      budget_total / (static_cast<double>(count_all) * static_cast<double>(num_layers));
  result.mean_cov_drop =
      decisions.empty() ? 0.0 : cov_drop_total / static_cast<double>(decisions.size());

  // 5) Estimator calibration from this iteration's DST statistics.
  if (!calib_decisions.empty() && setup.calibrate_every > 0 &&
      (iter_index + 1) % setup.calibrate_every == 0) {
    calibrate(est, calib_decisions, calib_lengths);
  }
  return result;
}

namespace {

double mean_of(const std::vector<double>& values) {
  if (values.empty()) return 0.0;
  return std::accumulate(values.begin(), values.end(), 0.0) /
         static_cast<double>(values.size());
}

double percentile_nearest_rank(std::vector<double> values, double fraction) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  auto rank = static_cast<std::size_t>(
      std::ceil(fraction * static_cast<double>(values.size())));
  if (rank == 0) rank = 1;
  return values[rank - 1];
}

}  // namespace

ComparisonReport run_scenarios(const SimHarness& harness,
                               const std::vector<ScenarioSpec>& specs) {
  if (specs.empty()) throw ConfigError("scenarios: must be non-empty");
  validate_cluster(harness.cluster);
  validate_table(harness.table);

  std::vector<std::int64_t> bin_edges = harness.estimator.bin_edges;
  if (bin_edges.empty()) bin_edges = default_bin_edges(harness.workload.distribution.max_length);

  ComparisonReport report;
  report.seed = harness.seed;
  report.scenarios.resize(specs.size());

  parallel_for(specs.size(), harness.jobs, [&](std::size_t idx) {
    const ScenarioSpec& spec = specs[idx];
    ScenarioStats stats;
    stats.name = spec.name.empty() ? strategy_name(spec.strategy) : spec.name;
    stats.strategy = spec.strategy;

    SparsityEstimator est =
        make_estimator(bin_edges, harness.table.budget_grid, harness.estimator.ema_alpha,
                       harness.estimator.default_budget);
    IterationSetup setup;
    setup.cluster = harness.cluster;
    setup.shape = harness.shape;
    setup.base_budget = harness.base_budget;
    setup.base_mode = harness.base_mode;
    setup.base_coverage_target = harness.base_coverage_target;
    setup.dst_scope = harness.dst_scope;
    setup.dst = spec.dst.has_value() ? *spec.dst : harness.dst;
    if (setup.dst.budget_grid.empty()) setup.dst.budget_grid = harness.table.budget_grid;
    setup.calibrate_every = harness.estimator.calibrate_every;

    const int iterations = spec.iterations > 0 ? spec.iterations : harness.iterations;
    const std::uint64_t seed_base = spec.seed != 0 ? spec.seed : harness.seed;
    stats.iterations.reserve(static_cast<std::size_t>(iterations));
    for (int t = 0; t < iterations; ++t) {
      auto samples = generate_samples(
          harness.workload.distribution, harness.shape.gbs,
          concentration_at(harness.workload.concentration, t), harness.cluster.num_layers(),
          harness.workload.block_size, mix_seed(seed_base, t));
      stats.iterations.push_back(
          simulate_iteration(samples, spec.strategy, setup, harness.table, est, t));
    }

    std::vector<double> iter_ms, imbalance, bubble, dst_ovh, sab_ovh, avg_budget, cov_drop;
    for (const ScheduleResult& r : stats.iterations) {
      iter_ms.push_back(r.iter_ms);
      imbalance.push_back(r.imbalance);
      bubble.push_back(r.bubble_ms);
      dst_ovh.push_back(r.dst_overhead_ms);
      sab_ovh.push_back(r.sab_overhead_ms);
      avg_budget.push_back(r.avg_budget);
      cov_drop.push_back(r.mean_cov_drop);
    }
    stats.mean_iter_ms = mean_of(iter_ms);
    stats.p50_iter_ms = percentile_nearest_rank(iter_ms, 0.5);
    stats.p90_iter_ms = percentile_nearest_rank(iter_ms, 0.9);
    stats.mean_imbalance = mean_of(imbalance);
    stats.mean_bubble_ms = mean_of(bubble);
    stats.mean_dst_overhead_ms = mean_of(dst_ovh);
    stats.mean_sab_overhead_ms = mean_of(sab_ovh);
    stats.mean_avg_budget = mean_of(avg_budget);
    stats.mean_cov_drop = mean_of(cov_drop);
    report.scenarios[idx] = std::move(stats);
  });

  std::size_t reference_idx = 0;
  for (std::size_t i = 0; i < report.scenarios.size(); ++i) {
    if (report.scenarios[i].name == "baseline") {
      reference_idx = i;
      break;
    }
  }
  report.reference = report.scenarios[reference_idx].name;
  double ref_mean = report.scenarios[reference_idx].mean_iter_ms;
  for (ScenarioStats& stats : report.scenarios) {
    stats.speedup = stats.mean_iter_ms > 0.0 ? ref_mean / stats.mean_iter_ms : 1.0;
  }
  log_info() << "run_scenarios: " << report.scenarios.size() << " scenarios, reference '"
             << report.reference << "'";
  return report;
}

}  // namespace sparsebalance
