// Copyright (c) 2026 The SparseBalance Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sparsebalance/rng.hpp"

namespace sparsebalance {

// Normalized per-block importance scores, sorted descending, summing to 1.
// One profile per model layer; the number of entries m = ceil(length / block_size)
// is the number of candidate attention blocks.
struct RoutingProfile {
  std::vector<double> scores;

  std::size_t num_blocks() const { return scores.size(); }
};

struct Sample {
  std::int64_t id = 0;
  std::int64_t length = 0;  // token count, >= 1
  std::vector<RoutingProfile> routing_profiles;  // one per layer
};

// A pipeline execution unit. For multi-sample micro-batches the per-layer
// profile is the token-weighted average of member profiles (padded to the
// longest member's block count), re-normalized and re-sorted.
struct MicroBatch {
  std::vector<Sample> samples;
  std::int64_t length_descriptor = 0;            // sum of member lengths
  std::vector<RoutingProfile> merged_profiles;   // one per layer

  const RoutingProfile& profile(std::size_t layer) const { return merged_profiles[layer]; }
};

MicroBatch make_micro_batch(std::vector<Sample> samples);

// One DP rank's share of an optimizer step: N micro-batches plus their
// per-micro-batch base attention budgets.
struct GlobalBatch {
  std::vector<MicroBatch> micro_batches;
  std::vector<int> base_budgets;
};

// Half-open length bin [lo, hi) with a non-negative sampling frequency.
struct HistogramBin {
  std::int64_t lo = 0;
  std::int64_t hi = 0;
  double frequency = 0.0;
};

struct LengthDistributionSpec {
  enum class Kind { kFixed, kBimodal, kLongTail, kHistogram };

  Kind kind = Kind::kBimodal;
  std::int64_t min_length = 64;
  std::int64_t max_length = 65536;

  // kind == kFixed
  std::int64_t fixed_length = 8192;

  // kind == kBimodal: mixture of two lognormals truncated to [min, max].
  double short_weight = 0.55;
  double short_log_mean = 7.3132203870903064;   // ln 1500
  double short_log_sigma = 0.7;
  double long_log_mean = 10.308952660644293;    // ln 30000
  double long_log_sigma = 0.45;

  // kind == kLongTail: Pareto truncated to [min, max].
  double tail_exponent = 1.1;

  // kind == kHistogram
  std::vector<HistogramBin> bins;
};

const char* distribution_kind_name(LengthDistributionSpec::Kind kind);
LengthDistributionSpec::Kind parse_distribution_kind(const std::string& name);

// Throws ConfigError naming the offending field.
void validate_distribution(const LengthDistributionSpec& spec);

std::int64_t sample_length(const LengthDistributionSpec& spec, Rng& rng);

// Controls how heterogeneous the synthesized routing profiles are: each
// sequence draws a base Dirichlet concentration alpha ~ LogNormal(alpha_log_mean,
// alpha_log_sigma) scaled by (length_ref / length)^length_exponent, perturbed
// per layer by a LogNormal(0, layer_log_sigma) factor. Smaller alpha = more
// concentrated scores = sparser-friendly; the length term makes long contexts
// proportionally sparser (attention mass concentrates as context grows), while
// the lognormal keeps sparsity varying between same-length sequences.
//
// The default coupling is deliberately steep: absolute block budgets saturate
// and then shrink as contexts grow, so expected cost per length bin is
// non-monotone in length (mid-length sequences that attend broadly are the
// most expensive). That is the regime sparsity-aware weighting is for; with a
// mild coupling, cost stays monotone in length and sparsity-aware plans
// degenerate to length-balanced ones.
struct ConcentrationSpec {
  double alpha_log_mean = -1.0498221244986776;  // ln 0.35
  double alpha_log_sigma = 0.3;
  double layer_log_sigma = 0.35;
  double length_ref = 12288.0;
  double length_exponent = 3.2;  // 0 = sparsity independent of length

  // Training-time evolution of the length-sparsity coupling: the exponent in
  // effect at iteration t swings sinusoidally, length_exponent +
  // drift_amplitude * sin(2*pi*t / drift_period), modeling shard-level domain
  // phases where the long-context share of the data is more or less sparse.
  // Amplitude 0 = stationary workload.
  double drift_amplitude = 0.0;
  int drift_period = 24;
};

void validate_concentration(const ConcentrationSpec& spec);

// The concentration parameters in effect at a training iteration; identity
// when drift_amplitude is 0.
ConcentrationSpec concentration_at(const ConcentrationSpec& spec, int iteration);

std::vector<Sample> generate_samples(const LengthDistributionSpec& spec, std::int64_t count,
                                     const ConcentrationSpec& concentration, int num_layers,
                                     int block_size, std::uint64_t seed);

// Histogram file: one `lo_tokens,hi_tokens,frequency` record per line,
// half-open bins, `#` comments and blank lines allowed.
LengthDistributionSpec load_histogram(const std::string& path);
void save_histogram(const std::vector<HistogramBin>& bins, const std::string& path);

// Two-level assignment of sample ids to DP ranks and micro-batches, with the
// per-sample workload weights the planner used (aligned with sample_ids).
struct PackingPlan {
  std::vector<std::vector<std::int64_t>> dp_bins;                        // rank -> ids
  std::vector<std::vector<std::vector<std::int64_t>>> micro_batch_bins;  // rank -> mb -> ids
  std::vector<std::int64_t> sample_ids;                                  // planner input order
  std::vector<double> weights;
};

// Builds one rank's GlobalBatch from the plan. Validates that the plan covers
// the given sample ids exactly once across all ranks. base_budgets are filled
// with base_budget for every micro-batch.
GlobalBatch assemble_global_batch(std::span<const Sample> samples, const PackingPlan& plan,
                                  int dp_rank, int base_budget);

// Smallest k with coverage >= target (m if never reached); a per-sample
// sparsity indicator used by workload reports.
int coverage_budget(const RoutingProfile& profile, double target);

// The budget the underlying sparse-attention method would assign to a
// micro-batch: mean over layers of the target-coverage budget, snapped up to
// the next grid budget (capped at the grid maximum).
int intrinsic_budget(const MicroBatch& mb, std::span<const int> budget_grid,
                     double coverage_target);

}  // namespace sparsebalance
