// Copyright (c) 2026 The SparseBalance Authors
// SPDX-License-Identifier: Apache-2.0

#include "sparsebalance/workload.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>
#include <string_view>
#include <unordered_map>
#include <unordered_set>

#include "sparsebalance/errors.hpp"
#include "sparsebalance/log.hpp"

namespace sparsebalance {

namespace {

constexpr int kMaxTruncationDraws = 256;

std::int64_t clamp_length(double value, std::int64_t lo, std::int64_t hi) {
  auto v = static_cast<std::int64_t>(std::llround(value));
  return std::clamp(v, lo, hi);
}

// Draws from `draw` until the value lands in [lo, hi]; clamps after a bounded
// number of attempts so the sampler stays total for extreme parameters.
template <typename Draw>
std::int64_t truncated_draw(Draw&& draw, std::int64_t lo, std::int64_t hi) {
  for (int attempt = 0; attempt < kMaxTruncationDraws; ++attempt) {
    double v = draw();
    auto rounded = static_cast<std::int64_t>(std::llround(v));
    if (rounded >= lo && rounded <= hi) return rounded;
  }
  return clamp_length(draw(), lo, hi);
}

RoutingProfile draw_profile(Rng& rng, std::int64_t length, int block_size, double alpha) {
  auto m = static_cast<std::size_t>((length + block_size - 1) / block_size);
  RoutingProfile profile;
  profile.scores.resize(m);
  double total = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    double g = rng.gamma(alpha);
    profile.scores[j] = g;
    total += g;
  }
  if (total <= 0.0) {
    // All-gamma-zero underflow (possible at tiny alpha): fall back to uniform.
    std::fill(profile.scores.begin(), profile.scores.end(), 1.0 / static_cast<double>(m));
  } else {
    for (double& s : profile.scores) s /= total;
  }
  std::sort(profile.scores.begin(), profile.scores.end(), std::greater<double>());
  return profile;
}

}  // namespace

MicroBatch make_micro_batch(std::vector<Sample> samples) {
  if (samples.empty()) throw ConfigError("micro-batch must contain at least one sample");
  MicroBatch mb;
  mb.samples = std::move(samples);
  mb.length_descriptor = 0;
  for (const Sample& s : mb.samples) mb.length_descriptor += s.length;

  std::size_t num_layers = mb.samples.front().routing_profiles.size();
  for (const Sample& s : mb.samples) {
    if (s.routing_profiles.size() != num_layers) {
      throw ConfigError("micro-batch members disagree on layer count");
    }
  }

  mb.merged_profiles.resize(num_layers);
  for (std::size_t layer = 0; layer < num_layers; ++layer) {
    std::size_t max_blocks = 0;
    for (const Sample& s : mb.samples) {
      max_blocks = std::max(max_blocks, s.routing_profiles[layer].scores.size());
    }
    std::vector<double> merged(max_blocks, 0.0);
    for (const Sample& s : mb.samples) {
      double weight = static_cast<double>(s.length) / static_cast<double>(mb.length_descriptor);
      const auto& scores = s.routing_profiles[layer].scores;
      for (std::size_t j = 0; j < scores.size(); ++j) merged[j] += weight * scores[j];
    }
    double total = 0.0;
    for (double v : merged) total += v;
    if (total > 0.0) {
      for (double& v : merged) v /= total;
    }
    std::sort(merged.begin(), merged.end(), std::greater<double>());
    mb.merged_profiles[layer].scores = std::move(merged);
  }
  return mb;
}

const char* distribution_kind_name(LengthDistributionSpec::Kind kind) {
  switch (kind) {
    case LengthDistributionSpec::Kind::kFixed: return "fixed";
    case LengthDistributionSpec::Kind::kBimodal: return "bimodal";
    case LengthDistributionSpec::Kind::kLongTail: return "long_tail";
    case LengthDistributionSpec::Kind::kHistogram: return "histogram";
  }
  return "?";
}

LengthDistributionSpec::Kind parse_distribution_kind(const std::string& name) {
  if (name == "fixed") return LengthDistributionSpec::Kind::kFixed;
  if (name == "bimodal") return LengthDistributionSpec::Kind::kBimodal;
  if (name == "long_tail") return LengthDistributionSpec::Kind::kLongTail;
  if (name == "histogram") return LengthDistributionSpec::Kind::kHistogram;
  throw ConfigError("distribution.kind: unknown kind '" + name +
                    "' (expected fixed|bimodal|long_tail|histogram)");
}

void validate_distribution(const LengthDistributionSpec& spec) {
  if (spec.min_length < 1) throw ConfigError("distribution.min_length: must be >= 1");
  if (spec.max_length < spec.min_length) {
    throw ConfigError("distribution.max_length: must be >= min_length");
  }
  switch (spec.kind) {
    case LengthDistributionSpec::Kind::kFixed:
      if (spec.fixed_length < spec.min_length || spec.fixed_length > spec.max_length) {
        throw ConfigError("distribution.fixed_length: outside [min_length, max_length]");
      }
      break;
    case LengthDistributionSpec::Kind::kBimodal:
      if (spec.short_weight < 0.0 || spec.short_weight > 1.0) {
        throw ConfigError("distribution.short_weight: must be in [0,1]");
      }
      if (spec.short_log_sigma < 0.0) throw ConfigError("distribution.short_log_sigma: must be >= 0");
      if (spec.long_log_sigma < 0.0) throw ConfigError("distribution.long_log_sigma: must be >= 0");
      break;
    case LengthDistributionSpec::Kind::kLongTail:
      if (spec.tail_exponent <= 0.0) throw ConfigError("distribution.tail_exponent: must be > 0");
      break;
    case LengthDistributionSpec::Kind::kHistogram: {
      if (spec.bins.empty()) throw ConfigError("distribution.bins: histogram must be non-empty");
      double total = 0.0;
      for (std::size_t i = 0; i < spec.bins.size(); ++i) {
        const HistogramBin& b = spec.bins[i];
        if (b.lo < 1 || b.hi <= b.lo) {
          throw ConfigError("distribution.bins[" + std::to_string(i) +
                            "]: requires 1 <= lo < hi");
        }
        if (b.frequency < 0.0) {
          throw ConfigError("distribution.bins[" + std::to_string(i) +
                            "].frequency: must be >= 0");
        }
        total += b.frequency;
      }
      if (total <= 0.0) throw ConfigError("distribution.bins: total frequency must be > 0");
      break;
    }
  }
}

std::int64_t sample_length(const LengthDistributionSpec& spec, Rng& rng) {
  switch (spec.kind) {
    case LengthDistributionSpec::Kind::kFixed:
      return spec.fixed_length;
    case LengthDistributionSpec::Kind::kBimodal:
      return truncated_draw(
          [&] {
            if (rng.uniform01() < spec.short_weight) {
              return rng.lognormal(spec.short_log_mean, spec.short_log_sigma);
            }
            return rng.lognormal(spec.long_log_mean, spec.long_log_sigma);
          },
          spec.min_length, spec.max_length);
    case LengthDistributionSpec::Kind::kLongTail: {
      // Inverse-CDF draw from a Pareto truncated to [min_length, max_length].
      double a = spec.tail_exponent;
      double lo = static_cast<double>(spec.min_length);
      double hi = static_cast<double>(spec.max_length);
      double u = rng.uniform01();
      double lo_pow = std::pow(lo, -a);
      double hi_pow = std::pow(hi, -a);
      double v = std::pow(lo_pow - u * (lo_pow - hi_pow), -1.0 / a);
      return clamp_length(v, spec.min_length, spec.max_length);
    }
    case LengthDistributionSpec::Kind::kHistogram: {
      double total = 0.0;
      for (const HistogramBin& b : spec.bins) total += b.frequency;
      double u = rng.uniform01() * total;
      std::size_t pick = spec.bins.size() - 1;
      double acc = 0.0;
      for (std::size_t i = 0; i < spec.bins.size(); ++i) {
        acc += spec.bins[i].frequency;
        if (u < acc) {
          pick = i;
          break;
        }
      }
      const HistogramBin& b = spec.bins[pick];
      return rng.uniform_int(b.lo, b.hi - 1);
    }
  }
  throw std::runtime_error("unreachable distribution kind");
}

void validate_concentration(const ConcentrationSpec& spec) {
  if (spec.alpha_log_sigma < 0.0) {
    throw ConfigError("concentration.alpha_log_sigma: must be >= 0");
  }
  if (spec.layer_log_sigma < 0.0) {
    throw ConfigError("concentration.layer_log_sigma: must be >= 0");
  }
  if (!(spec.length_ref > 0.0)) {
    throw ConfigError("concentration.length_ref: must be > 0");
  }
  if (spec.length_exponent < 0.0) {
    throw ConfigError("concentration.length_exponent: must be >= 0");
  }
  if (spec.drift_amplitude < 0.0) {
    throw ConfigError("concentration.drift_amplitude: must be >= 0");
  }
  if (spec.drift_period < 1) {
    throw ConfigError("concentration.drift_period: must be >= 1");
  }
}

ConcentrationSpec concentration_at(const ConcentrationSpec& spec, int iteration) {
  ConcentrationSpec at = spec;
  if (spec.drift_amplitude > 0.0) {
    constexpr double kTwoPi = 6.283185307179586;
    double phase = kTwoPi * static_cast<double>(iteration) /
                   static_cast<double>(spec.drift_period);
    at.length_exponent =
        std::max(0.0, spec.length_exponent + spec.drift_amplitude * std::sin(phase));
  }
  return at;
}

std::vector<Sample> generate_samples(const LengthDistributionSpec& spec, std::int64_t count,
                                     const ConcentrationSpec& concentration, int num_layers,
                                     int block_size, std::uint64_t seed) {
  if (count < 1) throw ConfigError("generate_samples: count must be >= 1");
  if (num_layers < 1) throw ConfigError("generate_samples: num_layers must be >= 1");
  if (block_size < 1) throw ConfigError("generate_samples: block_size must be >= 1");
  validate_distribution(spec);
  validate_concentration(concentration);

  Rng rng(mix_seed(seed));
  std::vector<Sample> samples;
  samples.reserve(static_cast<std::size_t>(count));
  for (std::int64_t i = 0; i < count; ++i) {
    Sample s;
    s.id = i;
    s.length = sample_length(spec, rng);
    double alpha_seq =
        rng.lognormal(concentration.alpha_log_mean, concentration.alpha_log_sigma) *
        std::pow(concentration.length_ref / static_cast<double>(s.length),
                 concentration.length_exponent);
    s.routing_profiles.reserve(static_cast<std::size_t>(num_layers));
    for (int layer = 0; layer < num_layers; ++layer) {
      double alpha_layer = alpha_seq;
      if (concentration.layer_log_sigma > 0.0) {
        alpha_layer *= rng.lognormal(0.0, concentration.layer_log_sigma);
      }
      alpha_layer = std::clamp(alpha_layer, 1e-4, 1e4);
      s.routing_profiles.push_back(draw_profile(rng, s.length, block_size, alpha_layer));
    }
    samples.push_back(std::move(s));
  }
  return samples;
}

LengthDistributionSpec load_histogram(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("histogram file not readable: " + path);

  LengthDistributionSpec spec;
  spec.kind = LengthDistributionSpec::Kind::kHistogram;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view sv(line);
    while (!sv.empty() && (sv.back() == '\r' || sv.back() == ' ' || sv.back() == '\t')) {
      sv.remove_suffix(1);
    }
    while (!sv.empty() && (sv.front() == ' ' || sv.front() == '\t')) sv.remove_prefix(1);
    if (sv.empty() || sv.front() == '#') continue;

    HistogramBin bin;
    std::istringstream row{std::string(sv)};
    char c1 = 0, c2 = 0;
    if (!(row >> bin.lo >> c1 >> bin.hi >> c2 >> bin.frequency) || c1 != ',' || c2 != ',' ||
        (row >> std::ws, !row.eof())) {
      throw ConfigError(path + ":" + std::to_string(line_no) +
                        ": malformed histogram row (expected lo,hi,frequency): " + line);
    }
    if (bin.lo < 1 || bin.hi <= bin.lo) {
      throw ConfigError(path + ":" + std::to_string(line_no) +
                        ": histogram bin requires 1 <= lo < hi");
    }
    if (bin.frequency < 0.0) {
      throw ConfigError(path + ":" + std::to_string(line_no) +
                        ": histogram frequency must be >= 0");
    }
    spec.bins.push_back(bin);
  }
  if (spec.bins.empty()) throw ConfigError(path + ": empty histogram");

  spec.min_length = spec.bins.front().lo;
  spec.max_length = spec.bins.front().hi - 1;
  for (const HistogramBin& b : spec.bins) {
    spec.min_length = std::min(spec.min_length, b.lo);
    spec.max_length = std::max(spec.max_length, b.hi - 1);
  }
  validate_distribution(spec);
  log_debug() << "loaded histogram " << path << " with " << spec.bins.size() << " bins";
  return spec;
}

void save_histogram(const std::vector<HistogramBin>& bins, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write histogram file: " + path);
  out << "# lo_tokens,hi_tokens,frequency\n";
  char buf[128];
  for (const HistogramBin& b : bins) {
    std::snprintf(buf, sizeof(buf), "%lld,%lld,%.6f\n", static_cast<long long>(b.lo),
                  static_cast<long long>(b.hi), b.frequency);
    out << buf;
  }
  if (!out) throw std::runtime_error("failed writing histogram file: " + path);
}

GlobalBatch assemble_global_batch(std::span<const Sample> samples, const PackingPlan& plan,
                                  int dp_rank, int base_budget) {
  if (dp_rank < 0 || static_cast<std::size_t>(dp_rank) >= plan.micro_batch_bins.size()) {
    throw ConfigError("assemble_global_batch: dp_rank " + std::to_string(dp_rank) +
                      " out of range for plan with " +
                      std::to_string(plan.micro_batch_bins.size()) + " ranks");
  }

  std::unordered_map<std::int64_t, const Sample*> by_id;
  by_id.reserve(samples.size());
  for (const Sample& s : samples) {
    if (!by_id.emplace(s.id, &s).second) {
      throw ConfigError("assemble_global_batch: duplicate sample id " + std::to_string(s.id));
    }
  }

  // The plan must cover the input ids exactly once across all ranks.
  std::unordered_set<std::int64_t> seen;
  seen.reserve(samples.size());
  for (const auto& rank_bins : plan.micro_batch_bins) {
    for (const auto& mb_ids : rank_bins) {
      for (std::int64_t id : mb_ids) {
        if (by_id.find(id) == by_id.end()) {
          throw ConfigError("assemble_global_batch: plan references unknown sample id " +
                            std::to_string(id));
        }
        if (!seen.insert(id).second) {
          throw ConfigError("assemble_global_batch: plan assigns sample id " +
                            std::to_string(id) + " more than once");
        }
      }
    }
  }
  if (seen.size() != samples.size()) {
    for (const Sample& s : samples) {
      if (seen.find(s.id) == seen.end()) {
        throw ConfigError("assemble_global_batch: plan omits sample id " +
                          std::to_string(s.id));
      }
    }
  }

  GlobalBatch gb;
  const auto& rank_bins = plan.micro_batch_bins[static_cast<std::size_t>(dp_rank)];
  gb.micro_batches.reserve(rank_bins.size());
  for (const auto& mb_ids : rank_bins) {
    std::vector<Sample> members;
    members.reserve(mb_ids.size());
    for (std::int64_t id : mb_ids) members.push_back(*by_id.at(id));
    gb.micro_batches.push_back(make_micro_batch(std::move(members)));
    gb.base_budgets.push_back(base_budget);
  }
  return gb;
}

int coverage_budget(const RoutingProfile& profile, double target) {
  double acc = 0.0;
  for (std::size_t j = 0; j < profile.scores.size(); ++j) {
    acc += profile.scores[j];
    if (acc >= target) return static_cast<int>(j + 1);
  }
  return static_cast<int>(profile.scores.size());
}

int intrinsic_budget(const MicroBatch& mb, std::span<const int> budget_grid,
                     double coverage_target) {
  if (budget_grid.empty()) throw ConfigError("intrinsic_budget: empty budget grid");
  if (mb.merged_profiles.empty()) throw ConfigError("intrinsic_budget: micro-batch has no profiles");
  double need = 0.0;
  for (const auto& profile : mb.merged_profiles) {
    need += static_cast<double>(coverage_budget(profile, coverage_target));
  }
  need /= static_cast<double>(mb.merged_profiles.size());
  auto it = std::lower_bound(budget_grid.begin(), budget_grid.end(),
                             static_cast<int>(std::ceil(need)));
  if (it == budget_grid.end()) return budget_grid.back();
  return *it;
}

}  // namespace sparsebalance
