// Copyright (c) 2026 The SparseBalance Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "sparsebalance/profile_table.hpp"
#include "sparsebalance/workload.hpp"

namespace sparsebalance::testing {

// Unique scratch directory, removed on destruction.
class TempDir {
 public:
  TempDir() {
    std::string tmpl =
        (std::filesystem::temp_directory_path() / "sparsebalance_test_XXXXXX").string();
    std::vector<char> buf(tmpl.begin(), tmpl.end());
    buf.push_back('\0');
    if (::mkdtemp(buf.data()) == nullptr) {
      throw std::runtime_error("mkdtemp failed for " + tmpl);
    }
    path_ = buf.data();
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << content;
}

// Literal lookup grid for hand-computed expectations. cells is row-major
// [length_bin][budget].
inline ProfileTable make_table(std::vector<std::int64_t> bins, std::vector<int> grid,
                               std::vector<double> cells) {
  ProfileTable table;
  table.length_bins = std::move(bins);
  table.budget_grid = std::move(grid);
  table.latency_ms = std::move(cells);
  return table;
}

// Single-sample micro-batch with one explicit per-layer profile replicated
// `layers` times. Scores must be normalized and descending.
inline MicroBatch make_mb(std::int64_t length, std::vector<double> scores, int layers = 1) {
  Sample s;
  s.id = 0;
  s.length = length;
  s.routing_profiles.assign(static_cast<std::size_t>(layers), RoutingProfile{scores});
  return make_micro_batch({s});
}

}  // namespace sparsebalance::testing
