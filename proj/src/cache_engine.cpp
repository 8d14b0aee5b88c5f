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

#include "h2cache/cache_engine.h"

#include <chrono>
#include <string>

#include "h2cache/error.h"

namespace h2cache {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

void check_cache(const CacheState& state, const Tensor4& z_t) {
  if (!state.populated) return;
  if (!(state.z_cache_in.shape() == z_t.shape()) ||
      state.z_prime_cache.empty() || state.eps_cache.empty() ||
      !(state.eps_cache.shape() == z_t.shape())) {
    throw Error(ErrorCode::kCacheCorruption,
                "cached tensors do not match run shape " +
                    to_string(z_t.shape()));
  }
}

void store(CacheState& state, const Tensor4& z_t, const Tensor4& z_prime,
           const Tensor4& eps, std::size_t t) {
  state.z_cache_in = z_t;
  state.z_prime_cache = z_prime;
  state.eps_cache = eps;
  state.source_step = t;
  state.populated = true;
}

double timed_metric(const SimilarityMetric& metric, const Tensor4& current,
                    const Tensor4& cached, double& seconds) {
  const auto start = Clock::now();
  const double value = metric_evaluate(metric, current, cached);
  seconds += seconds_since(start);
  return value;
}

}  // namespace

const char* outcome_name(OutcomeKind kind) {
  switch (kind) {
    case OutcomeKind::kJointHit: return "joint_hit";
    case OutcomeKind::kDetailHit: return "detail_hit";
    case OutcomeKind::kFullCompute: return "full_compute";
  }
  return "unknown";
}

StepResult full_step(const Tensor4& z_t, std::size_t t, std::size_t t_prev,
                     const StepContext& ctx) {
  StepResult r;
  r.z_prime = ctx.backend.stage1(z_t, t, ctx.cond);
  r.eps = ctx.backend.stage2(r.z_prime, t, ctx.cond);
  r.outcome = StepOutcome::full_compute();
  r.next = ddim_step(z_t, r.eps, t, t_prev, ctx.sched);
  return r;
}

StepResult h2_step(const Tensor4& z_t, std::size_t t, std::size_t t_prev,
                   const StepContext& ctx, const H2Config& cfg,
                   CacheState& state) {
  check_cache(state, z_t);
  if (!state.populated) {
    StepResult r = full_step(z_t, t, t_prev, ctx);
    store(state, z_t, r.z_prime, r.eps, t);
    return r;
  }

  StepResult r;
  r.metric1 = timed_metric(cfg.metric1, z_t, state.z_cache_in,
                           r.metric_seconds);
  if (is_hit(r.metric1, cfg.tau1)) {
    r.z_prime = state.z_prime_cache;
    r.eps = state.eps_cache;
    r.outcome = StepOutcome::joint_hit();
    r.next = ddim_step(z_t, r.eps, t, t_prev, ctx.sched);
    return r;
  }

  r.z_prime = ctx.backend.stage1(z_t, t, ctx.cond);
  if (!(r.z_prime.shape() == state.z_prime_cache.shape())) {
    throw Error(ErrorCode::kCacheCorruption,
                "stage-1 output " + to_string(r.z_prime.shape()) +
                    " does not match cached " +
                    to_string(state.z_prime_cache.shape()));
  }
  r.metric2 = timed_metric(cfg.metric2, r.z_prime, state.z_prime_cache,
                           r.metric_seconds);
  if (is_hit(r.metric2, cfg.tau2)) {
    r.eps = state.eps_cache;
    r.outcome = StepOutcome::detail_hit();
  } else {
    r.eps = ctx.backend.stage2(r.z_prime, t, ctx.cond);
    r.outcome = StepOutcome::full_compute();
  }
  r.next = ddim_step(z_t, r.eps, t, t_prev, ctx.sched);
  store(state, z_t, r.z_prime, r.eps, t);
  return r;
}

StepResult block_cache_step(const Tensor4& z_t, std::size_t t,
                            std::size_t t_prev, const StepContext& ctx,
                            double tau, const SimilarityMetric& metric,
                            CacheState& state) {
  check_cache(state, z_t);
  if (!state.populated) {
    StepResult r = full_step(z_t, t, t_prev, ctx);
    store(state, z_t, r.z_prime, r.eps, t);
    return r;
  }
  double metric_seconds = 0.0;
  const double value = timed_metric(metric, z_t, state.z_cache_in,
                                    metric_seconds);
  if (is_hit(value, tau)) {
    StepResult r;
    r.z_prime = state.z_prime_cache;
    r.eps = state.eps_cache;
    r.outcome = StepOutcome::joint_hit();
    r.next = ddim_step(z_t, r.eps, t, t_prev, ctx.sched);
    r.metric1 = value;
    r.metric_seconds = metric_seconds;
    return r;
  }
  StepResult r = full_step(z_t, t, t_prev, ctx);
  r.metric1 = value;
  r.metric_seconds = metric_seconds;
  store(state, z_t, r.z_prime, r.eps, t);
  return r;
}

const char* policy_name(const Policy& policy) {
  switch (policy.index()) {
    case 0: return "none";
    case 1: return "block";
    default: return "h2";
  }
}

double RunStats::hit_fraction() const {
  if (outcomes.empty()) return 0.0;
  return static_cast<double>(joint_hits + detail_hits) /
         static_cast<double>(outcomes.size());
}

void RunStats::record(const StepResult& step, double seconds) {
  outcomes.push_back(step.outcome);
  step_seconds.push_back(seconds);
  metric1_values.push_back(step.metric1);
  metric2_values.push_back(step.metric2);
  switch (step.outcome.kind) {
    case OutcomeKind::kJointHit: ++joint_hits; break;
    case OutcomeKind::kDetailHit: ++detail_hits; break;
    case OutcomeKind::kFullCompute: ++full_computes; break;
  }
  stage1_calls += step.outcome.stage1_executed ? 1 : 0;
  stage2_calls += step.outcome.stage2_executed ? 1 : 0;
  metric_checks += (step.metric1 == step.metric1 ? 1 : 0) +
                   (step.metric2 == step.metric2 ? 1 : 0);
  metric_seconds += step.metric_seconds;
}

RunStats sample_loop(const Policy& policy, const DenoiserBackend& backend,
                     const NoiseSchedule& sched, const Tensor4& z_T,
                     const Conditioning& cond, std::size_t sampler_steps,
                     const StepObserver& observer) {
  const std::vector<std::size_t> ts =
      sampler_timesteps(sched.steps(), sampler_steps);
  const StepContext ctx{backend, sched, cond};
  CacheState state;
  RunStats stats;
  stats.timesteps = ts;
  stats.outcomes.reserve(ts.size());

  const auto run_start = Clock::now();
  Tensor4 z = z_T;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    const std::size_t t = ts[i];
    const std::size_t t_prev = i + 1 < ts.size() ? ts[i + 1] : 0;
    const auto step_start = Clock::now();
    StepResult r = std::visit(
        [&](const auto& p) -> StepResult {
          using P = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<P, NoCachePolicy>) {
            return full_step(z, t, t_prev, ctx);
          } else if constexpr (std::is_same_v<P, BlockCachePolicy>) {
            return block_cache_step(z, t, t_prev, ctx, p.tau, p.metric,
                                    state);
          } else {
            return h2_step(z, t, t_prev, ctx, p.cfg, state);
          }
        },
        policy);
    stats.record(r, seconds_since(step_start));
    if (observer) observer(StepRecord{i, t, z, r, state});
    z = std::move(r.next);
  }
  stats.total_seconds = seconds_since(run_start);
  stats.final_latent = std::move(z);
  return stats;
}

}  // namespace h2cache
