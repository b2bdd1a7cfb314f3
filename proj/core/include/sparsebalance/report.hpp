// Copyright (c) 2026 The SparseBalance Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>

#include <nlohmann/json.hpp>

#include "sparsebalance/sim.hpp"

namespace sparsebalance {

// Per-iteration CSV, all scenarios in one file:
// scenario,iter,iter_ms,imbalance,max_mb_ms,mean_mb_ms,bubble_ms,dst_overhead_ms,avg_budget,mean_cov_drop
std::string iterations_csv(const ComparisonReport& report);
void write_iterations_csv(const ComparisonReport& report, const std::string& path);

// Comparison JSON: {"reference": ..., "seed": ..., "scenarios": {name: stats}}.
nlohmann::json comparison_to_json(const ComparisonReport& report);
void write_comparison_json(const ComparisonReport& report, const std::string& path);
ComparisonReport comparison_from_json(const nlohmann::json& j);

// Self-contained SVG bar chart of per-scenario speedups.
std::string speedup_svg(const ComparisonReport& report);
void write_speedup_svg(const ComparisonReport& report, const std::string& path);

// Fixed-width text summary (one row per scenario), printed by run/report.
std::string summary_table(const ComparisonReport& report);

}  // namespace sparsebalance
