/* Copyright 2026 The H2Cache Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

// Command-line experiment runner. Exit codes: 0 success, 1 config error,
// 2 runtime error, 3 io error.

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "h2cache/config.h"
#include "h2cache/error.h"
#include "h2cache/experiment.h"
#include "h2cache/report.h"
#include "h2cache/trace.h"

namespace {

using namespace h2cache;

constexpr int kExitConfig = 1;
constexpr int kExitRuntime = 2;
constexpr int kExitIo = 3;

struct CommonArgs {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string csv;
  std::string json;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("config", args.config_path, "Experiment config file")
      ->required();
  cmd->add_option("--set", args.overrides,
                  "Override a config key (key=value), repeatable");
  cmd->add_option("--csv", args.csv, "Write the table as CSV");
  cmd->add_option("--json", args.json, "Write the full report as JSON");
}

ExperimentConfig load(const CommonArgs& args) {
  ExperimentConfig cfg = parse_config(args.config_path);
  for (const auto& o : args.overrides) apply_override(cfg, o);
  if (!args.csv.empty()) cfg.output_csv = args.csv;
  if (!args.json.empty()) cfg.output_json = args.json;
  validate(cfg);
  return cfg;
}

void emit(const Report& report, const ExperimentConfig& cfg) {
  if (!cfg.output_csv.empty()) {
    emit_report(report, ReportFormat::kCsv, cfg.output_csv);
  }
  if (!cfg.output_json.empty()) {
    emit_report(report, ReportFormat::kJson, cfg.output_json);
  }
  std::cout << render_csv(report.table);
  for (const auto& [key, value] : report.summary) {
    std::cerr << key << " = " << format_value(value) << "\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"H2 two-stage cache engine and benchmark harness"};
  app.require_subcommand(1);

  CommonArgs run_args, sweep_args, steps_args, ablate_args, record_args,
      replay_args, bench_args;
  std::string tau1_grid = "0,0.05,0.15,0.5,inf";
  std::string tau2_grid = "0,0.05,0.1,0.18,0.3,inf";
  std::string step_list = "10,30,50,70,100";
  std::string ablate_tau2 = "0.15,0.18,0.2,0.24,0.3";
  std::string trace_out, trace_in;
  std::size_t record_seed_index = 0;
  std::size_t trials = 20;

  auto* run = app.add_subcommand("run", "Run the configured policy vs baseline");
  add_common(run, run_args);

  auto* sweep = app.add_subcommand("sweep-thresholds",
                                   "Grid over (tau1, tau2) for the H2 policy");
  add_common(sweep, sweep_args);
  sweep->add_option("--tau1", tau1_grid, "Comma-separated tau1 values");
  sweep->add_option("--tau2", tau2_grid, "Comma-separated tau2 values");

  auto* steps = app.add_subcommand("sweep-steps",
                                   "Speedup vs sampler step count");
  add_common(steps, steps_args);
  steps->add_option("--steps", step_list, "Comma-separated step counts");

  auto* ablate = app.add_subcommand("ablate-pfs",
                                    "H2 with and without pooled summaries");
  add_common(ablate, ablate_args);
  ablate->add_option("--tau2", ablate_tau2, "Comma-separated tau2 values");

  auto* record = app.add_subcommand("record-trace",
                                    "Record a NoCache trace for replay");
  add_common(record, record_args);
  record->add_option("--out", trace_out, "Trace output path")->required();
  record->add_option("--seed-index", record_seed_index,
                     "Index into the config's seed list");

  auto* replay = app.add_subcommand("replay",
                                    "Replay the configured policy on a trace");
  add_common(replay, replay_args);
  replay->add_option("--trace", trace_in, "Trace file")->required();

  auto* bench = app.add_subcommand("bench-metric",
                                   "Per-check time of each similarity metric");
  add_common(bench, bench_args);
  bench->add_option("--trials", trials, "Timed calls per metric");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (run->parsed()) {
      const ExperimentConfig cfg = load(run_args);
      emit(run_experiment(cfg).report, cfg);
    } else if (sweep->parsed()) {
      const ExperimentConfig cfg = load(sweep_args);
      emit(sweep_thresholds(cfg, parse_double_list(tau1_grid),
                            parse_double_list(tau2_grid)),
           cfg);
    } else if (steps->parsed()) {
      const ExperimentConfig cfg = load(steps_args);
      emit(sweep_steps(cfg, parse_size_list(step_list)), cfg);
    } else if (ablate->parsed()) {
      const ExperimentConfig cfg = load(ablate_args);
      emit(ablate_pfs(cfg, parse_double_list(ablate_tau2)), cfg);
    } else if (record->parsed()) {
      const ExperimentConfig cfg = load(record_args);
      if (record_seed_index >= cfg.seeds.size()) {
        throw Error(ErrorCode::kConfig, "--seed-index beyond seed list");
      }
      const PairedRunner runner(cfg);
      const Trace trace = record_trace(
          runner.backend(), runner.schedule(),
          runner.initial_latent(record_seed_index), runner.conditioning(),
          cfg.steps);
      write_trace(trace, trace_out);
      std::cerr << "wrote " << trace.steps.size() << " steps to "
                << trace_out << "\n";
    } else if (replay->parsed()) {
      const ExperimentConfig cfg = load(replay_args);
      emit(replay_report(read_trace(trace_in), cfg), cfg);
    } else if (bench->parsed()) {
      const ExperimentConfig cfg = load(bench_args);
      emit(bench_metric(cfg, trials), cfg);
    }
  } catch (const Error& e) {
    std::cerr << "error (" << error_code_name(e.code()) << "): " << e.what()
              << "\n";
    switch (e.code()) {
      case ErrorCode::kConfig: return kExitConfig;
      case ErrorCode::kIo: return kExitIo;
      default: return kExitRuntime;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return 0;
}
