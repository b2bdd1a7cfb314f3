// Copyright (c) 2026 The SparseBalance Authors
// SPDX-License-Identifier: Apache-2.0

#include "sparsebalance/workload.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include <gtest/gtest.h>

#include "sparsebalance/errors.hpp"
#include "sparsebalance/rng.hpp"
#include "test_util.hpp"

namespace sparsebalance {
namespace {

using testing::TempDir;
using testing::write_file;

TEST(GenerateSamples, FixedLengthProducesUniformLengths) {
  LengthDistributionSpec spec;
  spec.kind = LengthDistributionSpec::Kind::kFixed;
  spec.fixed_length = 8192;
  ConcentrationSpec conc;
  auto samples = generate_samples(spec, 3, conc, 2, 256, 42);
  ASSERT_EQ(samples.size(), 3u);
  for (const Sample& s : samples) {
    EXPECT_EQ(s.length, 8192);
    EXPECT_EQ(s.routing_profiles.size(), 2u);
  }
  EXPECT_EQ(samples[0].id, 0);
  EXPECT_EQ(samples[2].id, 2);
}

TEST(GenerateSamples, ProfilesAreNormalizedSortedAndSized) {
  LengthDistributionSpec spec;  // bimodal defaults
  ConcentrationSpec conc;
  auto samples = generate_samples(spec, 50, conc, 3, 256, 7);
  for (const Sample& s : samples) {
    const auto expected_blocks = static_cast<std::size_t>((s.length + 255) / 256);
    for (const RoutingProfile& profile : s.routing_profiles) {
      ASSERT_EQ(profile.num_blocks(), expected_blocks);
      double total = 0.0;
      for (std::size_t i = 0; i < profile.scores.size(); ++i) {
        EXPECT_GE(profile.scores[i], 0.0);
        if (i > 0) EXPECT_LE(profile.scores[i], profile.scores[i - 1]);
        total += profile.scores[i];
      }
      EXPECT_NEAR(total, 1.0, 1e-9);
    }
  }
}

TEST(GenerateSamples, BimodalLengthsStayInRangeAndAvoidMidBand) {
  LengthDistributionSpec spec;
  ConcentrationSpec conc;
  auto samples = generate_samples(spec, 10000, conc, 1, 256, 7);
  int mid_band = 0;
  for (const Sample& s : samples) {
    EXPECT_GE(s.length, spec.min_length);
    EXPECT_LE(s.length, spec.max_length);
    if (s.length >= 4096 && s.length <= 16384) ++mid_band;
  }
  // Two well-separated modes (~1.5K and ~30K tokens): the valley between them
  // holds little mass. Measured 8.5% at this seed; 15% leaves slack.
  EXPECT_LT(mid_band, 1500);
}

TEST(GenerateSamples, ConcentratedSpecYieldsHighCoverageAtSmallBudget) {
  LengthDistributionSpec spec;
  spec.kind = LengthDistributionSpec::Kind::kFixed;
  spec.fixed_length = 26000;
  ConcentrationSpec conc;
  conc.alpha_log_mean = std::log(0.01);
  conc.alpha_log_sigma = 0.0;
  conc.layer_log_sigma = 0.0;
  conc.length_exponent = 0.0;
  auto samples = generate_samples(spec, 20, conc, 1, 256, 3);
  for (const Sample& s : samples) {
    ASSERT_EQ(s.routing_profiles[0].num_blocks(), 102u);  // ceil(26000 / 256)
    double top10 = 0.0;
    for (int i = 0; i < 10; ++i) top10 += s.routing_profiles[0].scores[i];
    EXPECT_GE(top10, 0.9);
  }
}

TEST(GenerateSamples, SparsityVariesBetweenSamples) {
  LengthDistributionSpec spec;
  ConcentrationSpec conc;
  auto samples = generate_samples(spec, 1000, conc, 2, 256, 11);
  std::vector<double> k90;
  for (const Sample& s : samples) {
    double total = 0.0;
    for (const RoutingProfile& p : s.routing_profiles) total += coverage_budget(p, 0.9);
    k90.push_back(total / static_cast<double>(s.routing_profiles.size()));
  }
  double mean = 0.0;
  for (double v : k90) mean += v;
  mean /= static_cast<double>(k90.size());
  double var = 0.0;
  for (double v : k90) var += (v - mean) * (v - mean);
  const double cv = std::sqrt(var / static_cast<double>(k90.size())) / mean;
  // Heterogeneity is the premise of budget tuning; measured CV ~ 0.63.
  EXPECT_GT(cv, 0.2);
}

TEST(GenerateSamples, SameSeedReproducesSameWorkload) {
  LengthDistributionSpec spec;
  ConcentrationSpec conc;
  auto a = generate_samples(spec, 32, conc, 2, 256, 99);
  auto b = generate_samples(spec, 32, conc, 2, 256, 99);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].length, b[i].length);
    for (std::size_t l = 0; l < a[i].routing_profiles.size(); ++l) {
      EXPECT_EQ(a[i].routing_profiles[l].scores, b[i].routing_profiles[l].scores);
    }
  }
  auto c = generate_samples(spec, 32, conc, 2, 256, 100);
  bool any_diff = false;
  for (std::size_t i = 0; i < a.size(); ++i) any_diff |= a[i].length != c[i].length;
  EXPECT_TRUE(any_diff);
}

TEST(GenerateSamples, RejectsInvalidShape) {
  LengthDistributionSpec spec;
  ConcentrationSpec conc;
  EXPECT_THROW(generate_samples(spec, 0, conc, 1, 256, 1), ConfigError);
  EXPECT_THROW(generate_samples(spec, 1, conc, 0, 256, 1), ConfigError);
  EXPECT_THROW(generate_samples(spec, 1, conc, 1, 0, 1), ConfigError);
}

TEST(SampleLength, LongTailStaysInRange) {
  LengthDistributionSpec spec;
  spec.kind = LengthDistributionSpec::Kind::kLongTail;
  spec.min_length = 128;
  spec.max_length = 4096;
  Rng rng(5);
  for (int i = 0; i < 2000; ++i) {
    std::int64_t len = sample_length(spec, rng);
    EXPECT_GE(len, 128);
    EXPECT_LE(len, 4096);
  }
}

TEST(SampleLength, HistogramRespectsBinsAndFrequencies) {
  LengthDistributionSpec spec;
  spec.kind = LengthDistributionSpec::Kind::kHistogram;
  spec.bins = {{100, 200, 1.0}, {1000, 2000, 1.0}};
  spec.min_length = 100;
  spec.max_length = 2000;
  Rng rng(17);
  int low = 0, high = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    std::int64_t len = sample_length(spec, rng);
    if (len >= 100 && len <= 199) {
      ++low;
    } else if (len >= 1000 && len <= 1999) {
      ++high;
    } else {
      FAIL() << "length " << len << " outside both bins";
    }
  }
  EXPECT_NEAR(static_cast<double>(low) / n, 0.5, 0.03);
  EXPECT_NEAR(static_cast<double>(high) / n, 0.5, 0.03);
}

TEST(ValidateDistribution, NamesTheOffendingField) {
  LengthDistributionSpec spec;
  spec.short_weight = 1.5;
  try {
    validate_distribution(spec);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("short_weight"), std::string::npos);
  }

  LengthDistributionSpec bad_range;
  bad_range.min_length = 0;
  EXPECT_THROW(validate_distribution(bad_range), ConfigError);

  LengthDistributionSpec inverted;
  inverted.max_length = inverted.min_length - 1;
  EXPECT_THROW(validate_distribution(inverted), ConfigError);

  LengthDistributionSpec fixed_out;
  fixed_out.kind = LengthDistributionSpec::Kind::kFixed;
  fixed_out.fixed_length = fixed_out.max_length + 1;
  EXPECT_THROW(validate_distribution(fixed_out), ConfigError);

  LengthDistributionSpec hist;
  hist.kind = LengthDistributionSpec::Kind::kHistogram;
  EXPECT_THROW(validate_distribution(hist), ConfigError);  // no bins
}

TEST(DistributionKind, NamesRoundTrip) {
  for (auto kind :
       {LengthDistributionSpec::Kind::kFixed, LengthDistributionSpec::Kind::kBimodal,
        LengthDistributionSpec::Kind::kLongTail, LengthDistributionSpec::Kind::kHistogram}) {
    EXPECT_EQ(parse_distribution_kind(distribution_kind_name(kind)), kind);
  }
  EXPECT_THROW(parse_distribution_kind("gaussian"), ConfigError);
}

TEST(ConcentrationAt, IdentityWithoutDriftSinusoidWithIt) {
  ConcentrationSpec spec;
  ConcentrationSpec at7 = concentration_at(spec, 7);
  EXPECT_DOUBLE_EQ(at7.length_exponent, spec.length_exponent);

  spec.drift_amplitude = 0.5;
  spec.drift_period = 24;
  ConcentrationSpec at6 = concentration_at(spec, 6);  // sin(2*pi*6/24) = 1
  EXPECT_NEAR(at6.length_exponent, spec.length_exponent + 0.5, 1e-12);
  ConcentrationSpec at0 = concentration_at(spec, 0);
  EXPECT_NEAR(at0.length_exponent, spec.length_exponent, 1e-12);
}

TEST(Histogram, SaveLoadRoundTrip) {
  TempDir dir;
  std::vector<HistogramBin> bins = {{64, 512, 2.5}, {512, 4096, 1.0}, {4096, 8192, 0.25}};
  const std::string path = dir.file("hist.csv");
  save_histogram(bins, path);
  LengthDistributionSpec spec = load_histogram(path);
  EXPECT_EQ(spec.kind, LengthDistributionSpec::Kind::kHistogram);
  ASSERT_EQ(spec.bins.size(), 3u);
  for (std::size_t i = 0; i < bins.size(); ++i) {
    EXPECT_EQ(spec.bins[i].lo, bins[i].lo);
    EXPECT_EQ(spec.bins[i].hi, bins[i].hi);
    EXPECT_NEAR(spec.bins[i].frequency, bins[i].frequency, 1e-6);
  }
  EXPECT_EQ(spec.min_length, 64);
  EXPECT_EQ(spec.max_length, 8191);  // hi is exclusive
}

TEST(Histogram, LoadSkipsCommentsAndReportsMalformedLines) {
  TempDir dir;
  const std::string good = dir.file("good.csv");
  write_file(good, "# lo,hi,frequency\n\n128,256,1.0\n256,512,2.0\n");
  LengthDistributionSpec spec = load_histogram(good);
  ASSERT_EQ(spec.bins.size(), 2u);
  EXPECT_EQ(spec.bins[0].lo, 128);

  const std::string bad = dir.file("bad.csv");
  write_file(bad, "128,256,1.0\n256,not_a_number,2.0\n");
  try {
    load_histogram(bad);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find(bad), std::string::npos);
    EXPECT_NE(what.find(":2"), std::string::npos);  // offending line number
  }

  const std::string empty = dir.file("empty.csv");
  write_file(empty, "# nothing but comments\n");
  EXPECT_THROW(load_histogram(empty), ConfigError);
  EXPECT_THROW(load_histogram(dir.file("missing.csv")), ConfigError);
}

TEST(MakeMicroBatch, SingleSampleKeepsProfile) {
  Sample s;
  s.id = 4;
  s.length = 1000;
  s.routing_profiles = {RoutingProfile{{0.7, 0.2, 0.1}}};
  MicroBatch mb = make_micro_batch({s});
  EXPECT_EQ(mb.length_descriptor, 1000);
  ASSERT_EQ(mb.merged_profiles.size(), 1u);
  ASSERT_EQ(mb.merged_profiles[0].num_blocks(), 3u);
  EXPECT_NEAR(mb.merged_profiles[0].scores[0], 0.7, 1e-12);
  EXPECT_NEAR(mb.merged_profiles[0].scores[2], 0.1, 1e-12);
}

TEST(MakeMicroBatch, MergesProfilesByTokenWeight) {
  Sample a;
  a.id = 0;
  a.length = 100;
  a.routing_profiles = {RoutingProfile{{0.6, 0.4}}};
  Sample b;
  b.id = 1;
  b.length = 300;
  b.routing_profiles = {RoutingProfile{{0.7, 0.2, 0.1}}};
  MicroBatch mb = make_micro_batch({a, b});
  EXPECT_EQ(mb.length_descriptor, 400);
  ASSERT_EQ(mb.merged_profiles.size(), 1u);
  const auto& scores = mb.merged_profiles[0].scores;
  ASSERT_EQ(scores.size(), 3u);
  // 0.25 * [0.6, 0.4, 0] + 0.75 * [0.7, 0.2, 0.1], already normalized/sorted.
  EXPECT_NEAR(scores[0], 0.675, 1e-12);
  EXPECT_NEAR(scores[1], 0.25, 1e-12);
  EXPECT_NEAR(scores[2], 0.075, 1e-12);
}

TEST(MakeMicroBatch, RejectsEmptyAndMismatchedLayerCounts) {
  EXPECT_THROW(make_micro_batch({}), ConfigError);

  Sample a;
  a.id = 0;
  a.length = 100;
  a.routing_profiles = {RoutingProfile{{1.0}}, RoutingProfile{{1.0}}};
  Sample b;
  b.id = 1;
  b.length = 100;
  b.routing_profiles = {RoutingProfile{{1.0}}};
  EXPECT_THROW(make_micro_batch({a, b}), ConfigError);
}

std::vector<Sample> numbered_samples(int n, int layers = 1) {
  LengthDistributionSpec spec;
  ConcentrationSpec conc;
  return generate_samples(spec, n, conc, layers, 256, 21);
}

TEST(AssembleGlobalBatch, SingletonPlanPreservesOrderAndBudgets) {
  auto samples = numbered_samples(4);
  PackingPlan plan;
  plan.dp_bins = {{0, 1, 2, 3}};
  plan.micro_batch_bins = {{{0}, {1}, {2}, {3}}};
  plan.sample_ids = {0, 1, 2, 3};
  plan.weights = {1, 1, 1, 1};
  GlobalBatch gb = assemble_global_batch(samples, plan, 0, 32);
  ASSERT_EQ(gb.micro_batches.size(), 4u);
  ASSERT_EQ(gb.base_budgets.size(), 4u);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(gb.micro_batches[i].length_descriptor, samples[i].length);
    EXPECT_EQ(gb.base_budgets[i], 32);
  }
}

TEST(AssembleGlobalBatch, SplitsRanksDisjointly) {
  auto samples = numbered_samples(8);
  PackingPlan plan;
  plan.dp_bins = {{0, 2, 4, 6}, {1, 3, 5, 7}};
  plan.micro_batch_bins = {{{0, 2}, {4, 6}}, {{1, 3}, {5, 7}}};
  plan.sample_ids = {0, 1, 2, 3, 4, 5, 6, 7};
  plan.weights.assign(8, 1.0);
  GlobalBatch r0 = assemble_global_batch(samples, plan, 0, 16);
  GlobalBatch r1 = assemble_global_batch(samples, plan, 1, 16);
  ASSERT_EQ(r0.micro_batches.size(), 2u);
  ASSERT_EQ(r1.micro_batches.size(), 2u);
  EXPECT_EQ(r0.micro_batches[0].length_descriptor, samples[0].length + samples[2].length);
  EXPECT_EQ(r1.micro_batches[1].length_descriptor, samples[5].length + samples[7].length);
  EXPECT_THROW(assemble_global_batch(samples, plan, 2, 16), ConfigError);
}

TEST(AssembleGlobalBatch, RejectsBadPlans) {
  auto samples = numbered_samples(2);
  PackingPlan unknown;
  unknown.dp_bins = {{0, 5}};
  unknown.micro_batch_bins = {{{0}, {5}}};
  unknown.sample_ids = {0, 5};
  unknown.weights = {1, 1};
  EXPECT_THROW(assemble_global_batch(samples, unknown, 0, 32), ConfigError);

  PackingPlan twice;
  twice.dp_bins = {{0, 0}};
  twice.micro_batch_bins = {{{0}, {0}}};
  twice.sample_ids = {0, 1};
  twice.weights = {1, 1};
  EXPECT_THROW(assemble_global_batch(samples, twice, 0, 32), ConfigError);

  PackingPlan omits;
  omits.dp_bins = {{0}};
  omits.micro_batch_bins = {{{0}}};
  omits.sample_ids = {0, 1};
  omits.weights = {1, 1};
  try {
    assemble_global_batch(samples, omits, 0, 32);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("1"), std::string::npos);  // the omitted id
  }

  Sample dup_a;
  dup_a.id = 3;
  dup_a.length = 64;
  dup_a.routing_profiles = {RoutingProfile{{1.0}}};
  Sample dup_b = dup_a;
  PackingPlan plan;
  plan.dp_bins = {{3}};
  plan.micro_batch_bins = {{{3}}};
  plan.sample_ids = {3};
  plan.weights = {1};
  std::vector<Sample> dups = {dup_a, dup_b};
  EXPECT_THROW(assemble_global_batch(dups, plan, 0, 32), ConfigError);
}

TEST(CoverageBudget, SmallestBudgetReachingTarget) {
  RoutingProfile profile{{0.5, 0.3, 0.15, 0.05}};
  EXPECT_EQ(coverage_budget(profile, 0.5), 1);
  EXPECT_EQ(coverage_budget(profile, 0.8), 2);
  EXPECT_EQ(coverage_budget(profile, 0.9), 3);
  EXPECT_EQ(coverage_budget(profile, 0.96), 4);
}

TEST(IntrinsicBudget, MeanCoverageBudgetSnappedUpToGrid) {
  Sample s;
  s.id = 0;
  s.length = 1024;
  s.routing_profiles = {RoutingProfile{{0.5, 0.3, 0.15, 0.05}}};
  MicroBatch mb = make_micro_batch({s});
  const std::vector<int> grid = {1, 2, 4, 8};
  EXPECT_EQ(intrinsic_budget(mb, grid, 0.9), 4);   // mean budget 3 -> next grid entry
  EXPECT_EQ(intrinsic_budget(mb, grid, 0.5), 1);   // exact grid hit
  EXPECT_EQ(intrinsic_budget(mb, grid, 1.0), 4);   // capped at... budget 4 on grid
  const std::vector<int> small_grid = {1, 2};
  EXPECT_EQ(intrinsic_budget(mb, small_grid, 0.99), 2);  // capped at grid max
}

}  // namespace
}  // namespace sparsebalance
