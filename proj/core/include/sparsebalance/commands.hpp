// Copyright (c) 2026 The SparseBalance Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "sparsebalance/profile_table.hpp"

namespace sparsebalance {

// Exit codes shared by all commands: 0 success, 1 configuration error,
// 2 runtime error. Commands throw (ConfigError / std::runtime_error); the
// CLI main maps exceptions to codes via run_command().
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfigError = 1;
inline constexpr int kExitRuntimeError = 2;

struct GenProfileOptions {
  CostModelSpec model;
  std::vector<std::int64_t> length_bins;  // empty = defaults
  std::vector<int> budget_grid;           // empty = defaults
  std::uint64_t seed = 42;
  std::string output_path = "profile_table.csv";
};

struct GenWorkloadOptions {
  std::string config_path;  // empty = default config
  std::int64_t count = 1000;
  std::optional<std::uint64_t> seed;
  std::string output_path = "samples.csv";
  std::string histogram_path;  // optional: also emit a loadable histogram
  int histogram_bins = 32;
};

struct RunOptions {
  std::string config_path;  // empty = default config
  std::string output_dir = ".";
  std::optional<std::uint64_t> seed;
  std::optional<int> iterations;
  std::vector<std::string> scenarios;  // override the config's scenario list
  int jobs = 1;
};

struct SweepOptions {
  std::string config_path;
  std::string axis;  // p | anchor | mbs
  std::vector<std::string> values;
  std::string output_dir = ".";
  std::optional<std::uint64_t> seed;
  int jobs = 1;
};

struct ReportOptions {
  std::string input_path;  // comparison.json from a previous run
  std::string svg_path;    // empty = alongside the input
};

void cmd_gen_profile(const GenProfileOptions& options);
void cmd_gen_workload(const GenWorkloadOptions& options);
void cmd_run(const RunOptions& options);
void cmd_sweep(const SweepOptions& options);
void cmd_report(const ReportOptions& options);

// Invokes fn(), mapping ConfigError -> 1 and other std errors -> 2.
int run_command(const std::function<void()>& fn);

}  // namespace sparsebalance
