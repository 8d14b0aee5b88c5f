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

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "h2cache/cache_engine.h"
#include "h2cache/denoiser.h"
#include "h2cache/diffusion.h"
#include "h2cache/tensor.h"

namespace h2cache {

// Everything needed to reproduce an experiment. The on-disk form is a flat
// `key = value` file; see config_keys() for the accepted keys and README.md
// for their meaning.
struct ExperimentConfig {
  Shape shape{1, 4, 32, 32};
  std::size_t steps = 50;
  std::size_t schedule_steps = kDefaultScheduleSteps;
  double beta_start = kDefaultBetaStart;
  double beta_end = kDefaultBetaEnd;

  std::string backend = "smooth";
  std::uint64_t backend_seed = 7;
  double analytic_mu = 0.5;
  double analytic_sigma = 0.5;
  double smooth_gain = 0.5;
  std::size_t cond_dim = 8;
  std::uint64_t cond_seed = 11;
  CostModel cost;

  std::string policy = "h2";
  double tau1 = 0.15;
  double tau2 = 0.18;
  std::string metric1 = "pfs";
  std::string metric2 = "pfs";
  std::size_t dp1 = 16;
  std::size_t dp2 = 8;

  std::vector<std::uint64_t> seeds{0, 1, 2};
  std::size_t timing_repeats = 5;
  bool warmup = true;
  // 0 selects default_peak(reference).
  double psnr_peak = 0.0;

  std::string output_csv;
  std::string output_json;

  bool operator==(const ExperimentConfig&) const;
};

const std::vector<std::string>& config_keys();

// Parses `key = value` lines; '#' starts a comment. Unknown or repeated keys
// and malformed values throw ErrorCode::kConfig naming the key and line.
ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig parse_config(const std::filesystem::path& path);

// Applies one "key=value" override on top of an existing config.
void apply_override(ExperimentConfig& cfg, const std::string& assignment);

// Throws ErrorCode::kConfig on out-of-range or inconsistent values.
void validate(const ExperimentConfig& cfg);

// Canonical text form: every key, fixed order, one per line. Parsing the
// echo yields an equal config.
std::string config_echo(const ExperimentConfig& cfg);

// FNV-1a 64 of the echo without output paths, as 16 hex digits.
std::string config_hash(const ExperimentConfig& cfg);

NoiseSchedule build_schedule(const ExperimentConfig& cfg);
// The configured backend wrapped with the configured cost model.
BackendPtr build_backend(const ExperimentConfig& cfg,
                         const NoiseSchedule& sched);
Policy build_policy(const ExperimentConfig& cfg);
H2Config build_h2_config(const ExperimentConfig& cfg);

// Shortest round-trip decimal form; infinities print as "inf"/"-inf".
std::string format_double(double v);
double parse_double(const std::string& text);
std::vector<double> parse_double_list(const std::string& text);
std::vector<std::size_t> parse_size_list(const std::string& text);

}  // namespace h2cache
