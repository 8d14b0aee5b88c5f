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

#include "h2cache/denoiser.h"

#include <cmath>
#include <string>

#include "h2cache/error.h"
#include "h2cache/random.h"

namespace h2cache {

AnalyticGaussianBackend::AnalyticGaussianBackend(Tensor4 mu, double sigma,
                                                 NoiseSchedule sched)
    : mu_(std::move(mu)), sigma_(sigma), sched_(std::move(sched)) {
  if (!(sigma_ > 0.0) || !std::isfinite(sigma_)) {
    throw Error(ErrorCode::kInvalidArgument, "analytic sigma must be > 0");
  }
  require_finite(mu_, "AnalyticGaussianBackend");
}

double AnalyticGaussianBackend::noise_scale(std::size_t t) const {
  const double ab = sched_.alpha_bar(t);
  if (t == 0 || !(ab < 1.0)) {
    throw Error(ErrorCode::kSingularCoefficient,
                "analytic stage undefined at alpha_bar(" + std::to_string(t) +
                    ") = 1");
  }
  return std::sqrt(1.0 - ab);
}

Tensor4 AnalyticGaussianBackend::posterior_mean(const Tensor4& z_t,
                                                std::size_t t) const {
  require_same_shape(z_t, mu_, "posterior_mean");
  const double ab = sched_.alpha_bar(t);
  const double s2 = sigma_ * sigma_;
  const double denom = ab * s2 + (1.0 - ab);
  return linear_combination(std::sqrt(ab) * s2 / denom, z_t,
                            (1.0 - ab) / denom, mu_);
}

Tensor4 AnalyticGaussianBackend::stage1(const Tensor4& z_t, std::size_t t,
                                        const Conditioning&) const {
  noise_scale(t);
  require_same_shape(z_t, mu_, "analytic stage1");
  // z' = z - sqrt(ab) * E[z0|z], expanded so each element is one double
  // expression: z' = (1 - ab*s2/d) z - sqrt(ab)(1-ab)/d * mu.
  const double ab = sched_.alpha_bar(t);
  const double s2 = sigma_ * sigma_;
  const double denom = ab * s2 + (1.0 - ab);
  return linear_combination(1.0 - ab * s2 / denom, z_t,
                            -std::sqrt(ab) * (1.0 - ab) / denom, mu_);
}

Tensor4 AnalyticGaussianBackend::stage2(const Tensor4& z_prime,
                                        std::size_t t,
                                        const Conditioning&) const {
  return scale(z_prime, 1.0 / noise_scale(t));
}

SmoothRandomBackend::SmoothRandomBackend(const Shape& shape,
                                         std::uint64_t seed,
                                         NoiseSchedule sched,
                                         std::size_t cond_dim, double gain)
    : shape_(shape), sched_(std::move(sched)), cond_dim_(cond_dim),
      gain_(gain) {
  if (!(gain_ >= 0.0) || !std::isfinite(gain_)) {
    throw Error(ErrorCode::kInvalidArgument, "smooth gain must be >= 0");
  }
  const std::size_t c = shape_.channels;
  const double w_scale = 1.0 / std::sqrt(static_cast<double>(c));
  const double c_scale =
      cond_dim_ == 0 ? 0.0 : 0.1 / std::sqrt(static_cast<double>(cond_dim_));
  auto init = [&](Layer& layer, std::uint64_t stream) {
    NormalSampler normal(mix_seed(seed, stream));
    layer.weight.resize(c * c);
    for (double& w : layer.weight) w = normal.next() * w_scale;
    layer.bias.resize(c);
    for (double& b : layer.bias) b = normal.next() * 0.1;
    layer.cond.resize(c * cond_dim_);
    for (double& p : layer.cond) p = normal.next() * c_scale;
  };
  init(l1_, 1);
  init(l2_, 2);
}

void SmoothRandomBackend::check_input(const Tensor4& x, const Conditioning& c,
                                      const char* op) const {
  if (!(x.shape() == shape_)) {
    throw Error(ErrorCode::kShapeMismatch,
                std::string(op) + ": expected " + to_string(shape_) +
                    ", got " + to_string(x.shape()));
  }
  if (c.embedding.size() != cond_dim_) {
    throw Error(ErrorCode::kShapeMismatch,
                std::string(op) + ": conditioning has dim " +
                    std::to_string(c.embedding.size()) + ", expected " +
                    std::to_string(cond_dim_));
  }
}

Tensor4 SmoothRandomBackend::apply(const Layer& layer, const Tensor4& x,
                                   std::size_t t, const Conditioning& c,
                                   double identity_gain) const {
  const std::size_t channels = shape_.channels;
  const std::size_t plane = shape_.plane();
  const double time_embed =
      static_cast<double>(t) / static_cast<double>(sched_.steps());

  std::vector<double> shift(channels);
  for (std::size_t o = 0; o < channels; ++o) {
    double s = layer.bias[o] + time_embed;
    for (std::size_t k = 0; k < cond_dim_; ++k) {
      s += layer.cond[o * cond_dim_ + k] * c.embedding[k];
    }
    shift[o] = s;
  }

  Tensor4 out(shape_);
  auto in = x.data();
  auto dst = out.mutable_data();
  for (std::size_t b = 0; b < shape_.batch; ++b) {
    const float* src = in.data() + b * channels * plane;
    float* res = dst.data() + b * channels * plane;
    for (std::size_t p = 0; p < plane; ++p) {
      for (std::size_t o = 0; o < channels; ++o) {
        double pre = shift[o];
        for (std::size_t i = 0; i < channels; ++i) {
          pre += layer.weight[o * channels + i] * src[i * plane + p];
        }
        res[o * plane + p] = static_cast<float>(
            identity_gain * src[o * plane + p] + gain_ * std::tanh(pre));
      }
    }
  }
  require_finite(out, "smooth stage");
  return out;
}

Tensor4 SmoothRandomBackend::stage1(const Tensor4& z_t, std::size_t t,
                                    const Conditioning& c) const {
  check_input(z_t, c, "smooth stage1");
  return apply(l1_, z_t, t, c, 1.0);
}

Tensor4 SmoothRandomBackend::stage2(const Tensor4& z_prime, std::size_t t,
                                    const Conditioning& c) const {
  check_input(z_prime, c, "smooth stage2");
  return apply(l2_, z_prime, t, c, std::sqrt(1.0 - sched_.alpha_bar(t)));
}

namespace {

double frobenius(const std::vector<double>& m) {
  double s = 0.0;
  for (double v : m) s += v * v;
  return std::sqrt(s);
}

}  // namespace

double SmoothRandomBackend::stage1_lipschitz() const {
  return 1.0 + gain_ * frobenius(l1_.weight);
}

double SmoothRandomBackend::stage2_lipschitz(std::size_t t) const {
  return std::sqrt(1.0 - sched_.alpha_bar(t)) + gain_ * frobenius(l2_.weight);
}

double burn_work(std::uint64_t units) {
  double acc = 1.0;
  for (std::uint64_t i = 0; i < units; ++i) acc += 0x1.0p-30;
  return acc;
}

namespace {

class CostedBackend final : public DenoiserBackend {
 public:
  CostedBackend(BackendPtr inner, CostModel cost)
      : inner_(std::move(inner)), cost_(cost) {}

  Tensor4 stage1(const Tensor4& z_t, std::size_t t,
                 const Conditioning& c) const override {
    Tensor4 out = inner_->stage1(z_t, t, c);
    fold(out, burn_work(cost_.l1_work));
    return out;
  }

  Tensor4 stage2(const Tensor4& z_prime, std::size_t t,
                 const Conditioning& c) const override {
    Tensor4 out = inner_->stage2(z_prime, t, c);
    fold(out, burn_work(cost_.l2_work));
    return out;
  }

  std::string name() const override { return inner_->name(); }

 private:
  static void fold(Tensor4& out, double work) {
    float& first = out.mutable_data()[0];
    first += -0.0f * static_cast<float>(std::fabs(work));
  }

  BackendPtr inner_;
  CostModel cost_;
};

}  // namespace

BackendPtr wrap_with_cost(BackendPtr backend, CostModel cost) {
  return std::make_shared<CostedBackend>(std::move(backend), cost);
}

}  // namespace h2cache
