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
#include <functional>
#include <limits>
#include <variant>
#include <vector>

#include "h2cache/denoiser.h"
#include "h2cache/diffusion.h"
#include "h2cache/pfs.h"
#include "h2cache/tensor.h"

namespace h2cache {

// Tensors from the last step on which stage 1 ran. The three tensors are
// always replaced together and `source_step` records which step they came
// from.
struct CacheState {
  bool populated = false;
  Tensor4 z_cache_in;
  Tensor4 z_prime_cache;
  Tensor4 eps_cache;
  std::size_t source_step = 0;
};

struct H2Config {
  double tau1 = 0.15;
  double tau2 = 0.18;
  SimilarityMetric metric1 = PfsRelDiff{{16}};
  SimilarityMetric metric2 = PfsRelDiff{{8}};
};

enum class OutcomeKind { kJointHit, kDetailHit, kFullCompute };

const char* outcome_name(OutcomeKind kind);

struct StepOutcome {
  OutcomeKind kind = OutcomeKind::kFullCompute;
  bool stage1_executed = true;
  bool stage2_executed = true;

  static StepOutcome joint_hit() { return {OutcomeKind::kJointHit, false, false}; }
  static StepOutcome detail_hit() { return {OutcomeKind::kDetailHit, true, false}; }
  static StepOutcome full_compute() { return {OutcomeKind::kFullCompute, true, true}; }

  bool operator==(const StepOutcome&) const = default;
};

inline constexpr double kNotEvaluated = std::numeric_limits<double>::quiet_NaN();

// Everything one sampler step produced. z_prime/eps are the values actually
// used, cached or fresh. Metric fields are NaN when the check did not run.
struct StepResult {
  Tensor4 next;
  Tensor4 z_prime;
  Tensor4 eps;
  StepOutcome outcome;
  double metric1 = kNotEvaluated;
  double metric2 = kNotEvaluated;
  double metric_seconds = 0.0;
};

// Inputs shared by every step of a run.
struct StepContext {
  const DenoiserBackend& backend;
  const NoiseSchedule& sched;
  const Conditioning& cond;
};

// Strict comparison, so tau = 0 never hits on a non-negative metric.
inline bool is_hit(double metric_value, double tau) {
  return metric_value < tau;
}

// Hierarchical two-stage step from schedule step t to t_prev.
//
//   1. metric1(z_t, z_cache_in) < tau1: reuse z'_cache and eps_cache, no
//      stage runs and the cache is left as is.
//   2. otherwise run stage1; metric2(z'_t, z'_cache) < tau2 reuses
//      eps_cache, else stage2 runs.
//   3. on any step-1 miss the cache becomes (z_t, z'_t, eps).
// A cold cache always computes both stages.
StepResult h2_step(const Tensor4& z_t, std::size_t t, std::size_t t_prev,
                   const StepContext& ctx, const H2Config& cfg,
                   CacheState& state);

// Monolithic baseline: one check of z_t against z_cache_in. A hit reuses
// eps_cache; a miss runs both stages and refreshes the cache.
StepResult block_cache_step(const Tensor4& z_t, std::size_t t,
                            std::size_t t_prev, const StepContext& ctx,
                            double tau, const SimilarityMetric& metric,
                            CacheState& state);

// Both stages, no cache.
StepResult full_step(const Tensor4& z_t, std::size_t t, std::size_t t_prev,
                     const StepContext& ctx);

struct NoCachePolicy {};
struct BlockCachePolicy {
  double tau = 0.0;
  SimilarityMetric metric = FullL2{};
};
struct H2Policy {
  H2Config cfg;
};
using Policy = std::variant<NoCachePolicy, BlockCachePolicy, H2Policy>;

const char* policy_name(const Policy& policy);

struct RunStats {
  std::vector<std::size_t> timesteps;
  std::vector<StepOutcome> outcomes;
  std::vector<double> step_seconds;
  std::vector<double> metric1_values;
  std::vector<double> metric2_values;
  std::size_t joint_hits = 0;
  std::size_t detail_hits = 0;
  std::size_t full_computes = 0;
  std::size_t stage1_calls = 0;
  std::size_t stage2_calls = 0;
  std::size_t metric_checks = 0;
  double metric_seconds = 0.0;
  double total_seconds = 0.0;
  Tensor4 final_latent;

  std::size_t steps() const { return outcomes.size(); }
  double hit_fraction() const;
  void record(const StepResult& step, double seconds);
};

// Called after every step with the step's input latent and its result.
struct StepRecord {
  std::size_t index;  // 0-based position in the sampler sequence
  std::size_t t;
  const Tensor4& z_t;
  const StepResult& result;
  const CacheState& state;
};
using StepObserver = std::function<void(const StepRecord&)>;

// Runs the sampler from z_T over `sampler_steps` steps of `sched`
// (see sampler_timesteps) under the given policy.
RunStats sample_loop(const Policy& policy, const DenoiserBackend& backend,
                     const NoiseSchedule& sched, const Tensor4& z_T,
                     const Conditioning& cond, std::size_t sampler_steps,
                     const StepObserver& observer = {});

}  // namespace h2cache
