// Copyright (c) 2026 The SparseBalance Authors
// SPDX-License-Identifier: Apache-2.0

#include "sparsebalance/log.hpp"

#include <cstdio>
#include <cstdlib>
#include <cstring>

namespace sparsebalance {

namespace {

int parse_level_env() {
  const char* raw = std::getenv("SPARSEBALANCE_LOG");
  if (raw == nullptr || *raw == '\0') return -1;
  if (std::strcmp(raw, "error") == 0) return 0;
  if (std::strcmp(raw, "warn") == 0) return 1;
  if (std::strcmp(raw, "info") == 0) return 2;
  if (std::strcmp(raw, "debug") == 0) return 3;
  char* end = nullptr;
  long v = std::strtol(raw, &end, 10);
  if (end != raw && *end == '\0' && v >= 0 && v <= 3) return static_cast<int>(v);
  return -1;
}

int threshold() {
  static const int level = parse_level_env();
  return level;
}

const char* level_name(LogLevel level) {
  switch (level) {
    case LogLevel::kError: return "error";
    case LogLevel::kWarn: return "warn";
    case LogLevel::kInfo: return "info";
    case LogLevel::kDebug: return "debug";
  }
  return "?";
}

}  // namespace

bool log_enabled(LogLevel level) { return static_cast<int>(level) <= threshold(); }

void log_write(LogLevel level, const std::string& message) {
  std::fprintf(stderr, "[sparsebalance:%s] %s\n", level_name(level), message.c_str());
}

}  // namespace sparsebalance
