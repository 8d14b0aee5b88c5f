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

#include "h2cache/diffusion.h"

#include <cmath>
#include <string>

#include "h2cache/error.h"
#include "h2cache/random.h"

namespace h2cache {
namespace {

void check_step(std::size_t t, const NoiseSchedule& sched, bool allow_zero) {
  if ((t == 0 && !allow_zero) || t > sched.steps()) {
    throw Error(ErrorCode::kStepOutOfRange,
                "step " + std::to_string(t) + " outside 1.." +
                    std::to_string(sched.steps()));
  }
}

}  // namespace

NoiseSchedule::NoiseSchedule(std::vector<double> betas)
    : betas_(std::move(betas)) {
  if (betas_.empty()) {
    throw Error(ErrorCode::kInvalidSchedule, "schedule needs >= 1 step");
  }
  alphas_.reserve(betas_.size());
  alpha_bars_.reserve(betas_.size());
  double running = 1.0;
  for (double b : betas_) {
    if (!(b > 0.0 && b < 1.0)) {
      throw Error(ErrorCode::kInvalidSchedule,
                  "beta " + std::to_string(b) + " outside (0, 1)");
    }
    alphas_.push_back(1.0 - b);
    running *= 1.0 - b;
    alpha_bars_.push_back(running);
  }
}

double NoiseSchedule::beta(std::size_t t) const {
  check_step(t, *this, false);
  return betas_[t - 1];
}

double NoiseSchedule::alpha(std::size_t t) const {
  check_step(t, *this, false);
  return alphas_[t - 1];
}

double NoiseSchedule::alpha_bar(std::size_t t) const {
  check_step(t, *this, true);
  return t == 0 ? 1.0 : alpha_bars_[t - 1];
}

NoiseSchedule build_linear_schedule(std::size_t steps, double beta_start,
                                    double beta_end) {
  if (steps == 0 || !(beta_start > 0.0) || !(beta_start <= beta_end) ||
      !(beta_end < 1.0)) {
    throw Error(ErrorCode::kInvalidSchedule,
                "need steps >= 1 and 0 < beta_start <= beta_end < 1");
  }
  std::vector<double> betas(steps);
  if (steps == 1) {
    betas[0] = beta_start;
  } else {
    const double span = beta_end - beta_start;
    for (std::size_t i = 0; i < steps; ++i) {
      betas[i] = beta_start + span * static_cast<double>(i) /
                                  static_cast<double>(steps - 1);
    }
    betas.back() = beta_end;
  }
  return NoiseSchedule(std::move(betas));
}

Conditioning Conditioning::seeded(std::size_t dim, std::uint64_t seed) {
  Conditioning c;
  c.embedding.resize(dim);
  NormalSampler normal(seed);
  for (float& v : c.embedding) v = static_cast<float>(normal.next());
  return c;
}

Tensor4 forward_diffuse_closed(const Tensor4& z0, std::size_t t,
                               const Tensor4& eps,
                               const NoiseSchedule& sched) {
  require_same_shape(z0, eps, "forward_diffuse_closed");
  check_step(t, sched, false);
  const double ab = sched.alpha_bar(t);
  return linear_combination(std::sqrt(ab), z0, std::sqrt(1.0 - ab), eps);
}

Tensor4 forward_diffuse_step(const Tensor4& z_prev, std::size_t t,
                             const Tensor4& noise,
                             const NoiseSchedule& sched) {
  require_same_shape(z_prev, noise, "forward_diffuse_step");
  const double b = sched.beta(t);
  return linear_combination(std::sqrt(1.0 - b), z_prev, std::sqrt(b), noise);
}

Tensor4 forward_diffuse_chain(const Tensor4& z0, std::size_t t,
                              const NoiseSchedule& sched,
                              std::uint64_t seed) {
  check_step(t, sched, false);
  Tensor4 z = z0;
  for (std::size_t s = 1; s <= t; ++s) {
    z = forward_diffuse_step(z, s, seeded_gaussian(z0.shape(), mix_seed(seed, s)),
                             sched);
  }
  return z;
}

Tensor4 ddim_predict_z0(const Tensor4& z_t, const Tensor4& eps,
                        std::size_t t, const NoiseSchedule& sched) {
  require_same_shape(z_t, eps, "ddim_predict_z0");
  check_step(t, sched, false);
  const double ab = sched.alpha_bar(t);
  if (!(ab > 0.0)) {
    throw Error(ErrorCode::kSingularCoefficient,
                "alpha_bar(" + std::to_string(t) + ") is zero");
  }
  const double inv = 1.0 / std::sqrt(ab);
  return linear_combination(inv, z_t, -std::sqrt(1.0 - ab) * inv, eps);
}

Tensor4 ddim_step(const Tensor4& z_t, const Tensor4& eps, std::size_t t,
                  std::size_t t_prev, const NoiseSchedule& sched) {
  check_step(t, sched, false);
  if (t_prev >= t) {
    throw Error(ErrorCode::kStepOutOfRange,
                "ddim_step: previous step " + std::to_string(t_prev) +
                    " is not below " + std::to_string(t));
  }
  const Tensor4 z0_hat = ddim_predict_z0(z_t, eps, t, sched);
  const double ab_prev = sched.alpha_bar(t_prev);
  return linear_combination(std::sqrt(ab_prev), z0_hat,
                            std::sqrt(1.0 - ab_prev), eps);
}

double eps_mse_loss(const Tensor4& eps_true, const Tensor4& eps_pred) {
  require_same_shape(eps_true, eps_pred, "eps_mse_loss");
  auto a = eps_true.data();
  auto b = eps_pred.data();
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a[i]) - b[i];
    sum += d * d;
  }
  return sum / static_cast<double>(a.size());
}

std::vector<std::size_t> sampler_timesteps(std::size_t schedule_steps,
                                           std::size_t sampler_steps) {
  if (sampler_steps == 0 || sampler_steps > schedule_steps) {
    throw Error(ErrorCode::kInvalidArgument,
                "sampler steps " + std::to_string(sampler_steps) +
                    " must be in 1.." + std::to_string(schedule_steps));
  }
  std::vector<std::size_t> ts;
  ts.reserve(sampler_steps);
  for (std::size_t k = sampler_steps; k >= 1; --k) {
    ts.push_back(k * schedule_steps / sampler_steps);
  }
  return ts;
}

}  // namespace h2cache
