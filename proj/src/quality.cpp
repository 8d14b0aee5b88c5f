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

#include "h2cache/quality.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "h2cache/error.h"
#include "h2cache/pfs.h"

namespace h2cache {

double default_peak(const Tensor4& reference) {
  const double range = peak_to_peak(reference);
  return range > 0.0 ? range : 1.0;
}

double psnr(const Tensor4& reference, const Tensor4& test, double peak) {
  require_same_shape(reference, test, "psnr");
  if (!(peak > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "psnr peak must be > 0");
  }
  auto a = reference.data();
  auto b = test.data();
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a[i]) - b[i];
    sum += d * d;
  }
  const double mse = sum / static_cast<double>(a.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(peak * peak / mse);
}

double ssim(const Tensor4& reference, const Tensor4& test) {
  require_same_shape(reference, test, "ssim");
  const Shape& s = reference.shape();
  if (s.height < kSsimWindow || s.width < kSsimWindow) {
    throw Error(ErrorCode::kWindowTooLarge,
                "ssim window " + std::to_string(kSsimWindow) +
                    " exceeds spatial dims " + to_string(s));
  }
  const double range = default_peak(reference);
  const double c1 = (kSsimK1 * range) * (kSsimK1 * range);
  const double c2 = (kSsimK2 * range) * (kSsimK2 * range);
  const double n = static_cast<double>(kSsimWindow * kSsimWindow);

  const std::size_t wy = s.height - kSsimWindow + 1;
  const std::size_t wx = s.width - kSsimWindow + 1;
  double total = 0.0;
  std::size_t windows = 0;
  for (std::size_t p = 0; p < s.batch * s.channels; ++p) {
    const float* x = reference.data().data() + p * s.plane();
    const float* y = test.data().data() + p * s.plane();
    for (std::size_t oy = 0; oy < wy; ++oy) {
      for (std::size_t ox = 0; ox < wx; ++ox) {
        double sx = 0, sy = 0;
        for (std::size_t ky = 0; ky < kSsimWindow; ++ky) {
          const std::size_t row = (oy + ky) * s.width + ox;
          for (std::size_t kx = 0; kx < kSsimWindow; ++kx) {
            sx += x[row + kx];
            sy += y[row + kx];
          }
        }
        const double mx = sx / n;
        const double my = sy / n;
        // Centered second pass; keeps var == cov exactly when x == y.
        double vxx = 0, vyy = 0, vxy = 0;
        for (std::size_t ky = 0; ky < kSsimWindow; ++ky) {
          const std::size_t row = (oy + ky) * s.width + ox;
          for (std::size_t kx = 0; kx < kSsimWindow; ++kx) {
            const double a = x[row + kx] - mx;
            const double b = y[row + kx] - my;
            vxx += a * a;
            vyy += b * b;
            vxy += a * b;
          }
        }
        vxx /= n;
        vyy /= n;
        vxy /= n;
        total += ((2 * mx * my + c1) * (2 * vxy + c2)) /
                 ((mx * mx + my * my + c1) * (vxx + vyy + c2));
        ++windows;
      }
    }
  }
  return total / static_cast<double>(windows);
}

double relative_l2(const Tensor4& reference, const Tensor4& test) {
  return l2_distance(test, reference) /
         std::max(l2_norm(reference), kDivisionEpsilon);
}

}  // namespace h2cache
