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
#include <string>
#include <utility>
#include <variant>

#include "h2cache/tensor.h"

namespace h2cache {

// Guards relative metrics against an all-zero reference. A zero reference
// with a nonzero current tensor yields a huge value, i.e. a guaranteed miss.
inline constexpr double kDivisionEpsilon = 1e-12;

struct PfsConfig {
  std::size_t divisor = 1;

  bool operator==(const PfsConfig&) const = default;
};

// max(1, floor(h / divisor)). The clamp keeps large divisors valid: they
// degrade to a full-resolution comparison.
std::size_t kernel_size(std::size_t h, std::size_t divisor);

// (floor((h - k) / k) + 1, floor((w - k) / k) + 1).
std::pair<std::size_t, std::size_t> thumbnail_dims(std::size_t h,
                                                   std::size_t w,
                                                   std::size_t kernel);

// Average-pools `t` with kernel = stride = kernel_size(H, divisor).
Tensor4 summarize(const Tensor4& t, const PfsConfig& cfg);

// E|thumb(current) - thumb(cached)| / max(E|thumb(cached)|, eps).
//
// Evaluated in a single fused pass; the result is bit-identical to the
// composition of summarize, subtract and mean_abs.
double relative_difference(const Tensor4& current, const Tensor4& cached,
                           const PfsConfig& cfg);

// Absolute Euclidean distance over full tensors.
struct FullL2 {
  bool operator==(const FullL2&) const = default;
};
// Full-tensor L2 distance divided by max(|cached|_2, eps).
struct FullRelL2 {
  bool operator==(const FullRelL2&) const = default;
};
// Pooled relative mean-abs difference.
struct PfsRelDiff {
  PfsConfig cfg;
  bool operator==(const PfsRelDiff&) const = default;
};

using SimilarityMetric = std::variant<FullRelL2, FullL2, PfsRelDiff>;

double metric_evaluate(const SimilarityMetric& metric, const Tensor4& current,
                       const Tensor4& cached);

// Config spelling: "full_rel_l2", "full_l2" or "pfs".
std::string metric_name(const SimilarityMetric& metric);
SimilarityMetric make_metric(const std::string& name, std::size_t divisor);

}  // namespace h2cache
