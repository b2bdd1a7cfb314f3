// Copyright (c) 2026 The SparseBalance Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace sparsebalance {

// Invalid user-supplied configuration (bad field values, inconsistent shapes,
// malformed input files). The CLI maps this to exit code 1; all other
// std::runtime_error failures (I/O, internal) map to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace sparsebalance
