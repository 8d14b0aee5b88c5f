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

#include "h2cache/tensor.h"

namespace h2cache {

// Peak-to-peak range of the reference, or 1 when the reference is constant.
// Used as PSNR peak and SSIM dynamic range for unbounded latents.
double default_peak(const Tensor4& reference);

// 10 * log10(peak^2 / MSE). Returns +infinity when MSE is zero; reports
// spell that value "inf".
double psnr(const Tensor4& reference, const Tensor4& test, double peak);

inline constexpr std::size_t kSsimWindow = 8;
inline constexpr double kSsimK1 = 0.01;
inline constexpr double kSsimK2 = 0.03;

// Single-scale SSIM with an 8x8 uniform window at stride 1, population
// statistics, C1 = (k1 L)^2, C2 = (k2 L)^2 and L = default_peak(reference).
// Mean over all windows of every (batch, channel) plane.
double ssim(const Tensor4& reference, const Tensor4& test);

// |test - reference|_2 / max(|reference|_2, eps).
double relative_l2(const Tensor4& reference, const Tensor4& test);

}  // namespace h2cache
