// Copyright (c) 2026 The SparseBalance Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <sstream>
#include <string>

namespace sparsebalance {

enum class LogLevel { kError = 0, kWarn = 1, kInfo = 2, kDebug = 3 };

// Threshold comes from the SPARSEBALANCE_LOG environment variable
// ("error" | "warn" | "info" | "debug", or 0-3). Unset disables all logging.
bool log_enabled(LogLevel level);
void log_write(LogLevel level, const std::string& message);

namespace detail {
class LogLine {
 public:
  explicit LogLine(LogLevel level) : level_(level), enabled_(log_enabled(level)) {}
  ~LogLine() {
    if (enabled_) log_write(level_, stream_.str());
  }
  template <typename T>
  LogLine& operator<<(const T& value) {
    if (enabled_) stream_ << value;
    return *this;
  }

 private:
  LogLevel level_;
  bool enabled_;
  std::ostringstream stream_;
};
}  // namespace detail

inline detail::LogLine log_error() { return detail::LogLine(LogLevel::kError); }
inline detail::LogLine log_warn() { return detail::LogLine(LogLevel::kWarn); }
inline detail::LogLine log_info() { return detail::LogLine(LogLevel::kInfo); }
inline detail::LogLine log_debug() { return detail::LogLine(LogLevel::kDebug); }

}  // namespace sparsebalance
