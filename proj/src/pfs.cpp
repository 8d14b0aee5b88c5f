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

#include "h2cache/pfs.h"

#include <algorithm>
#include <cmath>
#include <vector>

#include "h2cache/error.h"

namespace h2cache {

std::size_t kernel_size(std::size_t h, std::size_t divisor) {
  if (h == 0 || divisor == 0) {
    throw Error(ErrorCode::kInvalidArgument,
                "kernel_size needs h >= 1 and divisor >= 1");
  }
  return std::max<std::size_t>(1, h / divisor);
}

std::pair<std::size_t, std::size_t> thumbnail_dims(std::size_t h,
                                                   std::size_t w,
                                                   std::size_t kernel) {
  return {pooled_extent(h, kernel), pooled_extent(w, kernel)};
}

Tensor4 summarize(const Tensor4& t, const PfsConfig& cfg) {
  return avg_pool_2d(t, kernel_size(t.shape().height, cfg.divisor));
}

double relative_difference(const Tensor4& current, const Tensor4& cached,
                           const PfsConfig& cfg) {
  require_same_shape(current, cached, "relative_difference");
  const Shape& s = current.shape();
  const std::size_t k = kernel_size(s.height, cfg.divisor);
  const auto [out_h, out_w] = thumbnail_dims(s.height, s.width, k);
  const double inv_area = 1.0 / static_cast<double>(k * k);

  if (k == 1) {
    // 1x1 windows: the thumbnail is the tensor itself.
    double num = 0.0;
    double den = 0.0;
    const float* a = current.data().data();
    const float* b = cached.data().data();
    const std::size_t n = s.numel();
    for (std::size_t i = 0; i < n; ++i) {
      num += std::fabs(static_cast<double>(a[i] - b[i]));
      den += std::fabs(static_cast<double>(b[i]));
    }
    const double count = static_cast<double>(n);
    return (num / count) / std::max(den / count, kDivisionEpsilon);
  }

  std::vector<double> columns(s.width);
  std::vector<double> sums_cur(out_w);
  std::vector<double> sums_ref(out_w);
  double num = 0.0;
  double den = 0.0;
  const float* a = current.data().data();
  const float* b = cached.data().data();
  const std::size_t planes = s.batch * s.channels;
  for (std::size_t p = 0; p < planes; ++p) {
    const float* pa = a + p * s.plane();
    const float* pb = b + p * s.plane();
    for (std::size_t oy = 0; oy < out_h; ++oy) {
      detail::pooled_row_sums(pa, s.width, k, oy, columns, sums_cur);
      detail::pooled_row_sums(pb, s.width, k, oy, columns, sums_ref);
      for (std::size_t ox = 0; ox < out_w; ++ox) {
        const float ta = static_cast<float>(sums_cur[ox] * inv_area);
        const float tb = static_cast<float>(sums_ref[ox] * inv_area);
        const float diff = ta - tb;
        num += std::fabs(static_cast<double>(diff));
        den += std::fabs(static_cast<double>(tb));
      }
    }
  }
  const double count = static_cast<double>(planes * out_h * out_w);
  return (num / count) / std::max(den / count, kDivisionEpsilon);
}

double metric_evaluate(const SimilarityMetric& metric, const Tensor4& current,
                       const Tensor4& cached) {
  require_same_shape(current, cached, "metric_evaluate");
  return std::visit(
      [&](const auto& m) -> double {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, FullL2>) {
          return l2_distance(current, cached);
        } else if constexpr (std::is_same_v<M, FullRelL2>) {
          return l2_distance(current, cached) /
                 std::max(l2_norm(cached), kDivisionEpsilon);
        } else {
          return relative_difference(current, cached, m.cfg);
        }
      },
      metric);
}

std::string metric_name(const SimilarityMetric& metric) {
  return std::visit(
      [](const auto& m) -> std::string {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, FullL2>) {
          return "full_l2";
        } else if constexpr (std::is_same_v<M, FullRelL2>) {
          return "full_rel_l2";
        } else {
          return "pfs";
        }
      },
      metric);
}

SimilarityMetric make_metric(const std::string& name, std::size_t divisor) {
  if (name == "full_l2") return FullL2{};
  if (name == "full_rel_l2") return FullRelL2{};
  if (name == "pfs") {
    if (divisor == 0) {
      throw Error(ErrorCode::kInvalidArgument, "pfs divisor must be >= 1");
    }
    return PfsRelDiff{{divisor}};
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown metric '" + name + "'");
}

}  // namespace h2cache
