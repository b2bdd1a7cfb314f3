// Copyright (c) 2026 The SparseBalance Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <random>

namespace sparsebalance {

// Mixes an arbitrary number of integers into a single sub-stream seed
// (splitmix64 finalizer). Used to derive independent deterministic streams,
// e.g. per iteration or per sweep point, from one top-level seed.
std::uint64_t mix_seed(std::uint64_t seed);
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a);
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b);

// Deterministic random source. All samplers are hand-rolled on top of
// std::mt19937_64 so that generated byte streams are identical across
// standard-library implementations (std::*_distribution is not portable).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1) with 53-bit resolution.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Uniform on (0, 1]; safe as a log() argument.
  double uniform_pos() {
    return (static_cast<double>(engine_() >> 11) + 1.0) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Inclusive integer range.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);

  // Standard normal via Box-Muller (no cached spare: fixed draw count).
  double normal();
  double normal(double mean, double sigma) { return mean + sigma * normal(); }

  double lognormal(double log_mean, double log_sigma) {
    return std::exp(normal(log_mean, log_sigma));
  }

  // Gamma(shape, scale=1) via Marsaglia-Tsang squeeze; shape < 1 uses the
  // Gamma(shape + 1) * U^(1/shape) boost.
  double gamma(double shape);

 private:
  std::mt19937_64 engine_;
};

}  // namespace sparsebalance
