// Copyright (c) 2026 The SparseBalance Authors
// SPDX-License-Identifier: Apache-2.0
//
// sparsebalance CLI: workload/table generation, scenario runs, ablation
// sweeps, and report rendering. Log verbosity via SPARSEBALANCE_LOG.

#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sparsebalance/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"SparseBalance workload simulator and scheduling toolkit"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags may be given before or after the subcommand

  // Global flags shared by the subcommands.
  std::string config_path;
  std::string output_dir = ".";
  std::optional<std::uint64_t> seed;
  int jobs = 1;
  app.add_option("--config", config_path, "Run configuration JSON (omit for built-in defaults)");
  app.add_option("--output-dir", output_dir, "Directory for generated reports")
      ->capture_default_str();
  app.add_option("--seed", seed, "Override the configuration's top-level seed");
  app.add_option("--jobs", jobs, "Parallel scenario/sweep-point workers")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  // gen-profile ------------------------------------------------------------
  sparsebalance::GenProfileOptions gen_profile;
  CLI::App* gp = app.add_subcommand(
      "gen-profile", "Synthesize a latency profile table CSV from the analytic cost model");
  gp->add_option("--c-lin", gen_profile.model.c_lin, "Linear per-token cost (ms/token)")
      ->capture_default_str();
  gp->add_option("--c-attn", gen_profile.model.c_attn,
                 "Attention cost per token x attended-token (ms)")
      ->capture_default_str();
  gp->add_option("--c-fixed", gen_profile.model.c_fixed, "Fixed per-layer cost (ms)")
      ->capture_default_str();
  gp->add_option("--noise", gen_profile.model.noise_sigma,
                 "Lognormal measurement-noise sigma (0 = exact)")
      ->capture_default_str();
  gp->add_option("--block-size", gen_profile.model.block_size, "Tokens per attention block")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  gp->add_option("--x-grid", gen_profile.length_bins, "Token-count bins (default: built-in grid)")
      ->delimiter(',');
  gp->add_option("--k-grid", gen_profile.budget_grid, "Budget grid (default: built-in grid)")
      ->delimiter(',');
  gp->add_option("-o,--output", gen_profile.output_path, "Output CSV path")
      ->capture_default_str();

  // gen-workload -----------------------------------------------------------
  sparsebalance::GenWorkloadOptions gen_workload;
  CLI::App* gw = app.add_subcommand(
      "gen-workload", "Sample a synthetic workload and report per-sample sparsity");
  gw->add_option("--count", gen_workload.count, "Number of samples")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  gw->add_option("-o,--output", gen_workload.output_path, "Output CSV path (id,length,k90)")
      ->capture_default_str();
  gw->add_option("--histogram", gen_workload.histogram_path,
                 "Also write a length histogram loadable as a distribution");
  gw->add_option("--histogram-bins", gen_workload.histogram_bins, "Log-spaced histogram bins")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  // run ---------------------------------------------------------------------
  sparsebalance::RunOptions run;
  CLI::App* rn = app.add_subcommand("run", "Simulate the configured scenarios and write reports");
  rn->add_option("--iterations", run.iterations, "Override the configured iteration count")
      ->check(CLI::PositiveNumber);
  rn->add_option("--scenarios", run.scenarios,
                 "Subset/override of scenario names (comma-separated)")
      ->delimiter(',');

  // sweep -------------------------------------------------------------------
  sparsebalance::SweepOptions sweep;
  CLI::App* sw = app.add_subcommand("sweep", "Run the scenario set across one ablation axis");
  sw->add_option("--axis", sweep.axis, "Sweep axis: p, anchor, or mbs")->required();
  sw->add_option("--values", sweep.values, "Axis values (comma-separated)")
      ->delimiter(',')
      ->required();

  // report ------------------------------------------------------------------
  sparsebalance::ReportOptions report;
  CLI::App* rp = app.add_subcommand("report", "Render a summary table and SVG from comparison JSON");
  rp->add_option("input", report.input_path, "comparison.json from a previous run")->required();
  rp->add_option("--svg", report.svg_path, "SVG output path (default: alongside the input)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return sparsebalance::kExitConfigError;
  }

  if (gp->parsed()) {
    gen_profile.seed = seed.value_or(gen_profile.seed);
    return sparsebalance::run_command([&] { sparsebalance::cmd_gen_profile(gen_profile); });
  }
  if (gw->parsed()) {
    gen_workload.config_path = config_path;
    gen_workload.seed = seed;
    return sparsebalance::run_command([&] { sparsebalance::cmd_gen_workload(gen_workload); });
  }
  if (rn->parsed()) {
    run.config_path = config_path;
    run.output_dir = output_dir;
    run.seed = seed;
    run.jobs = jobs;
    return sparsebalance::run_command([&] { sparsebalance::cmd_run(run); });
  }
  if (sw->parsed()) {
    sweep.config_path = config_path;
    sweep.output_dir = output_dir;
    sweep.seed = seed;
    sweep.jobs = jobs;
    return sparsebalance::run_command([&] { sparsebalance::cmd_sweep(sweep); });
  }
  if (rp->parsed()) {
    return sparsebalance::run_command([&] { sparsebalance::cmd_report(report); });
  }
  return sparsebalance::kExitConfigError;  // unreachable: require_subcommand(1)
}
