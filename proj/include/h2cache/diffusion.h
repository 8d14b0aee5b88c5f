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

#include "h2cache/tensor.h"

namespace h2cache {

// Variance schedule over T training steps.
//
// Steps are 1-indexed in the public API (t = 1..T); storage is 0-indexed, so
// beta(t) == betas()[t - 1]. alpha_bar(0) is defined as 1, which makes the
// final DDIM step (t = 1 -> 0) return the predicted clean latent.
class NoiseSchedule {
 public:
  explicit NoiseSchedule(std::vector<double> betas);

  std::size_t steps() const { return betas_.size(); }

  const std::vector<double>& betas() const { return betas_; }
  const std::vector<double>& alphas() const { return alphas_; }
  const std::vector<double>& alpha_bars() const { return alpha_bars_; }

  double beta(std::size_t t) const;
  double alpha(std::size_t t) const;
  // Valid for t in 0..T.
  double alpha_bar(std::size_t t) const;

 private:
  std::vector<double> betas_;
  std::vector<double> alphas_;
  std::vector<double> alpha_bars_;
};

inline constexpr double kDefaultBetaStart = 1e-4;
inline constexpr double kDefaultBetaEnd = 2e-2;
inline constexpr std::size_t kDefaultScheduleSteps = 1000;

// Linear betas from beta_start to beta_end, both endpoints included.
NoiseSchedule build_linear_schedule(std::size_t steps, double beta_start,
                                    double beta_end);

// Toy stand-in for text conditioning: a fixed-length embedding vector.
struct Conditioning {
  std::vector<float> embedding;

  static Conditioning seeded(std::size_t dim, std::uint64_t seed);
};

// sqrt(ab_t) * z0 + sqrt(1 - ab_t) * eps.
Tensor4 forward_diffuse_closed(const Tensor4& z0, std::size_t t,
                               const Tensor4& eps,
                               const NoiseSchedule& sched);

// Applies q(z_s | z_{s-1}) for s = 1..t with independent noise per step.
// The draw for step s uses seeded_gaussian(shape, mix_seed(seed, s)).
Tensor4 forward_diffuse_chain(const Tensor4& z0, std::size_t t,
                              const NoiseSchedule& sched, std::uint64_t seed);

// One Markov transition z_{t-1} -> z_t with an explicit noise draw.
Tensor4 forward_diffuse_step(const Tensor4& z_prev, std::size_t t,
                             const Tensor4& noise,
                             const NoiseSchedule& sched);

// (z_t - sqrt(1 - ab_t) * eps) / sqrt(ab_t).
Tensor4 ddim_predict_z0(const Tensor4& z_t, const Tensor4& eps,
                        std::size_t t, const NoiseSchedule& sched);

// Deterministic DDIM update from step t to step t_prev (< t):
//   sqrt(ab_prev) * z0_hat + sqrt(1 - ab_prev) * eps.
Tensor4 ddim_step(const Tensor4& z_t, const Tensor4& eps, std::size_t t,
                  std::size_t t_prev, const NoiseSchedule& sched);

// Adjacent-step form, t -> t - 1.
inline Tensor4 ddim_step(const Tensor4& z_t, const Tensor4& eps,
                         std::size_t t, const NoiseSchedule& sched) {
  return ddim_step(z_t, eps, t, t - 1, sched);
}

// Mean squared elementwise difference. Evaluation only.
double eps_mse_loss(const Tensor4& eps_true, const Tensor4& eps_pred);

// Descending training steps visited by an n-step sampler over the schedule:
// t_k = floor(k * T / n) for k = n..1. With n == T this is T, T-1, ..., 1.
std::vector<std::size_t> sampler_timesteps(std::size_t schedule_steps,
                                           std::size_t sampler_steps);

}  // namespace h2cache
