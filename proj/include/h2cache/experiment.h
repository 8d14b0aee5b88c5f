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
#include <vector>

#include "h2cache/cache_engine.h"
#include "h2cache/config.h"
#include "h2cache/report.h"
#include "h2cache/trace.h"

namespace h2cache {

// One seed's baseline/policy pair. Times are medians over the timed repeats.
struct SeedRun {
  std::uint64_t seed = 0;
  RunStats baseline;
  RunStats cached;
  double baseline_seconds = 0.0;
  double cached_seconds = 0.0;
  double speedup = 1.0;
  double psnr_db = 0.0;
  double ssim = 1.0;
  double rel_l2 = 0.0;
};

// Owns the schedule, backend and per-seed initial latents of a config and
// runs policies against same-seed NoCache baselines.
//
// Timing: an optional warm-up pair is discarded, then `timing_repeats`
// baseline/policy pairs run interleaved; the median of each is reported.
class PairedRunner {
 public:
  explicit PairedRunner(const ExperimentConfig& cfg);

  SeedRun run_seed(const Policy& policy, std::size_t seed_index) const;
  std::vector<SeedRun> run_all(const Policy& policy) const;

  const ExperimentConfig& config() const { return cfg_; }
  const NoiseSchedule& schedule() const { return sched_; }
  const DenoiserBackend& backend() const { return *backend_; }
  const Conditioning& conditioning() const { return cond_; }
  const Tensor4& initial_latent(std::size_t seed_index) const {
    return z_T_.at(seed_index);
  }

 private:
  RunStats sample(const Policy& policy, std::size_t seed_index) const;

  ExperimentConfig cfg_;
  NoiseSchedule sched_;
  BackendPtr backend_;
  Conditioning cond_;
  std::vector<Tensor4> z_T_;
};

double median(std::vector<double> values);
double mean_of(const std::vector<double>& values);
// Sample standard deviation; 0 for fewer than two values.
double stddev_of(const std::vector<double>& values);
// Mean PSNR where any infinite entry makes the mean infinite.
double mean_psnr(const std::vector<double>& values);

struct RunReport {
  Report report;
  std::vector<SeedRun> runs;
};

// Columns: config_hash, seed, policy, tau1, tau2, dp1, dp2, T,
// time_total_s, joint_hits, detail_hits, full_computes, psnr_db, ssim,
// rel_l2. Each seed emits its baseline row (policy "none") followed by the
// policy row; a NoCache config emits only the baseline rows.
RunReport run_experiment(const ExperimentConfig& cfg);

// One row per (tau1, tau2), aggregated over seeds, plus best_* marker
// columns flagging the per-metric optimum among rows with any cache hit.
Report sweep_thresholds(const ExperimentConfig& cfg,
                        const std::vector<double>& tau1_grid,
                        const std::vector<double>& tau2_grid);

// One row per sampler step count, with speedup against a same-T baseline.
Report sweep_steps(const ExperimentConfig& cfg,
                   const std::vector<std::size_t>& step_counts);

// For every tau2, paired rows for the H2 policy with PFS metrics (dp1, dp2)
// and without (divisor = H, i.e. full-tensor relative mean-abs).
Report ablate_pfs(const ExperimentConfig& cfg,
                  const std::vector<double>& tau2_grid);

// Median per-call time of each metric variant on two seeded tensors of the
// configured shape.
Report bench_metric(const ExperimentConfig& cfg, std::size_t trials);

// Per-step decisions and metric values of the configured policy replayed on
// a recorded trace.
Report replay_report(const Trace& trace, const ExperimentConfig& cfg);

}  // namespace h2cache
