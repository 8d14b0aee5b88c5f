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

#include "h2cache/tensor.h"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "h2cache/error.h"
#include "h2cache/random.h"

namespace h2cache {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kUnsupportedRank: return "unsupported-rank";
    case ErrorCode::kKernelTooLarge: return "kernel-too-large";
    case ErrorCode::kShapeMismatch: return "shape-mismatch";
    case ErrorCode::kInvalidSchedule: return "invalid-schedule";
    case ErrorCode::kStepOutOfRange: return "step-out-of-range";
    case ErrorCode::kSingularCoefficient: return "singular-coefficient";
    case ErrorCode::kCacheCorruption: return "cache-corruption";
    case ErrorCode::kFormat: return "format";
    case ErrorCode::kIo: return "io";
    case ErrorCode::kConfig: return "config";
    case ErrorCode::kWindowTooLarge: return "window-too-large";
    case ErrorCode::kInvalidArgument: return "invalid-argument";
    case ErrorCode::kNonFinite: return "non-finite";
  }
  return "unknown";
}

std::string to_string(const Shape& shape) {
  return "(" + std::to_string(shape.batch) + "," +
         std::to_string(shape.channels) + "," + std::to_string(shape.height) +
         "," + std::to_string(shape.width) + ")";
}

namespace {

void validate_shape(const Shape& shape) {
  if (shape.batch == 0 || shape.channels == 0 || shape.height == 0 ||
      shape.width == 0) {
    throw Error(ErrorCode::kInvalidArgument,
                "tensor extents must be >= 1, got " + to_string(shape));
  }
}

}  // namespace

Tensor4::Tensor4(const Shape& shape) : shape_(shape) {
  validate_shape(shape);
  data_.assign(shape.numel(), 0.0f);
}

Tensor4::Tensor4(const Shape& shape, std::vector<float> data)
    : shape_(shape), data_(std::move(data)) {
  validate_shape(shape);
  if (data_.size() != shape.numel()) {
    throw Error(ErrorCode::kShapeMismatch,
                "buffer of " + std::to_string(data_.size()) +
                    " elements does not match shape " + to_string(shape));
  }
  require_finite(*this, "Tensor4");
}

Tensor4 Tensor4::filled(const Shape& shape, float value) {
  return Tensor4(shape, std::vector<float>(shape.numel(), value));
}

bool Tensor4::all_finite() const {
  return std::all_of(data_.begin(), data_.end(),
                     [](float v) { return std::isfinite(v); });
}

bool Tensor4::bitwise_equal(const Tensor4& other) const {
  return shape_ == other.shape_ && data_.size() == other.data_.size() &&
         (data_.empty() ||
          std::memcmp(data_.data(), other.data_.data(),
                      data_.size() * sizeof(float)) == 0);
}

void require_same_shape(const Tensor4& a, const Tensor4& b, const char* op) {
  if (!(a.shape() == b.shape())) {
    throw Error(ErrorCode::kShapeMismatch,
                std::string(op) + ": shape " + to_string(a.shape()) +
                    " vs " + to_string(b.shape()));
  }
}

void require_finite(const Tensor4& t, const char* op) {
  if (!t.all_finite()) {
    throw Error(ErrorCode::kNonFinite,
                std::string(op) + ": result contains NaN or Inf");
  }
}

Tensor4 standardize_to_4d(const RawTensor& raw) {
  const auto& d = raw.dims;
  Shape shape;
  switch (d.size()) {
    case 1: shape = {1, 1, d[0], 1}; break;
    case 2: shape = {1, 1, d[0], d[1]}; break;
    case 3: shape = {d[0], 1, d[1], d[2]}; break;
    case 4: shape = {d[0], d[1], d[2], d[3]}; break;
    default:
      throw Error(ErrorCode::kUnsupportedRank,
                  "standardize_to_4d: rank " + std::to_string(d.size()) +
                      " is not in 1..4");
  }
  return Tensor4(shape, raw.data);
}

std::size_t pooled_extent(std::size_t extent, std::size_t kernel) {
  if (kernel == 0 || kernel > extent) {
    throw Error(ErrorCode::kKernelTooLarge,
                "pooling kernel " + std::to_string(kernel) +
                    " does not fit extent " + std::to_string(extent));
  }
  return (extent - kernel) / kernel + 1;
}

namespace detail {

__attribute__((target_clones("avx2", "default")))
void pooled_row_sums(const float* plane, std::size_t width,
                     std::size_t kernel, std::size_t out_row,
                     std::span<double> columns, std::span<double> sums) {
  const float* row = plane + out_row * kernel * width;
  double* __restrict col = columns.data();
  auto at = [&](std::size_t r) { return row + r * width; };
  // Rows are folded in sequentially; grouping up to four per sweep keeps
  // the per-column order ((r0 + r1) + r2) + ... while touching `col` less.
  std::size_t ky = 0;
  if (kernel >= 4) {
    const float* __restrict r0 = at(0);
    const float* __restrict r1 = at(1);
    const float* __restrict r2 = at(2);
    const float* __restrict r3 = at(3);
    for (std::size_t x = 0; x < width; ++x) {
      col[x] = ((static_cast<double>(r0[x]) + r1[x]) + r2[x]) + r3[x];
    }
    ky = 4;
  } else {
    const float* __restrict r0 = at(0);
    for (std::size_t x = 0; x < width; ++x) col[x] = r0[x];
    ky = 1;
  }
  for (; ky + 4 <= kernel; ky += 4) {
    const float* __restrict r0 = at(ky);
    const float* __restrict r1 = at(ky + 1);
    const float* __restrict r2 = at(ky + 2);
    const float* __restrict r3 = at(ky + 3);
    for (std::size_t x = 0; x < width; ++x) {
      col[x] = (((col[x] + r0[x]) + r1[x]) + r2[x]) + r3[x];
    }
  }
  for (; ky < kernel; ++ky) {
    const float* __restrict r0 = at(ky);
    for (std::size_t x = 0; x < width; ++x) col[x] += r0[x];
  }

  double* __restrict out = sums.data();
  const std::size_t n = sums.size();
  if (kernel == 4) {
    for (std::size_t ox = 0; ox < n; ++ox) {
      const double* c = col + ox * 4;
      out[ox] = ((c[0] + c[1]) + c[2]) + c[3];
    }
    return;
  }
  if (kernel == 8) {
    for (std::size_t ox = 0; ox < n; ++ox) {
      const double* c = col + ox * 8;
      out[ox] = ((((((c[0] + c[1]) + c[2]) + c[3]) + c[4]) + c[5]) + c[6]) +
                c[7];
    }
    return;
  }
  for (std::size_t ox = 0; ox < n; ++ox) {
    const double* cell = col + ox * kernel;
    double acc = cell[0];
    for (std::size_t kx = 1; kx < kernel; ++kx) acc += cell[kx];
    out[ox] = acc;
  }
}

}  // namespace detail

Tensor4 avg_pool_2d(const Tensor4& t, std::size_t kernel) {
  const Shape& in = t.shape();
  const std::size_t out_h = pooled_extent(in.height, kernel);
  const std::size_t out_w = pooled_extent(in.width, kernel);
  if (kernel == 1) return t;

  Tensor4 out({in.batch, in.channels, out_h, out_w});
  const double inv_area = 1.0 / static_cast<double>(kernel * kernel);
  std::vector<double> columns(in.width);
  std::vector<double> sums(out_w);
  auto src = t.data();
  auto dst = out.mutable_data();
  const std::size_t planes = in.batch * in.channels;
  for (std::size_t p = 0; p < planes; ++p) {
    const float* plane = src.data() + p * in.plane();
    float* out_plane = dst.data() + p * out_h * out_w;
    for (std::size_t oy = 0; oy < out_h; ++oy) {
      detail::pooled_row_sums(plane, in.width, kernel, oy, columns, sums);
      for (std::size_t ox = 0; ox < out_w; ++ox) {
        out_plane[oy * out_w + ox] = static_cast<float>(sums[ox] * inv_area);
      }
    }
  }
  return out;
}

double l2_distance(const Tensor4& a, const Tensor4& b) {
  require_same_shape(a, b, "l2_distance");
  auto x = a.data();
  auto y = b.data();
  double sum = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = static_cast<double>(x[i]) - static_cast<double>(y[i]);
    sum += d * d;
  }
  return std::sqrt(sum);
}

double l2_norm(const Tensor4& t) {
  double sum = 0.0;
  for (float v : t.data()) sum += static_cast<double>(v) * v;
  return std::sqrt(sum);
}

double mean_abs(const Tensor4& t) {
  double sum = 0.0;
  for (float v : t.data()) sum += std::fabs(static_cast<double>(v));
  return sum / static_cast<double>(t.numel());
}

double mean(const Tensor4& t) {
  double sum = 0.0;
  for (float v : t.data()) sum += v;
  return sum / static_cast<double>(t.numel());
}

double peak_to_peak(const Tensor4& t) {
  auto [lo, hi] = std::minmax_element(t.data().begin(), t.data().end());
  return static_cast<double>(*hi) - static_cast<double>(*lo);
}

Tensor4 subtract(const Tensor4& a, const Tensor4& b) {
  require_same_shape(a, b, "subtract");
  Tensor4 out(a.shape());
  auto x = a.data();
  auto y = b.data();
  auto o = out.mutable_data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = x[i] - y[i];
  require_finite(out, "subtract");
  return out;
}

Tensor4 linear_combination(double ka, const Tensor4& a, double kb,
                           const Tensor4& b) {
  require_same_shape(a, b, "linear_combination");
  Tensor4 out(a.shape());
  auto x = a.data();
  auto y = b.data();
  auto o = out.mutable_data();
  for (std::size_t i = 0; i < o.size(); ++i) {
    o[i] = static_cast<float>(ka * x[i] + kb * y[i]);
  }
  require_finite(out, "linear_combination");
  return out;
}

Tensor4 scale(const Tensor4& t, double k) {
  Tensor4 out(t.shape());
  auto x = t.data();
  auto o = out.mutable_data();
  for (std::size_t i = 0; i < o.size(); ++i) {
    o[i] = static_cast<float>(k * x[i]);
  }
  require_finite(out, "scale");
  return out;
}

Tensor4 seeded_gaussian(const Shape& shape, std::uint64_t seed) {
  Tensor4 out(shape);
  NormalSampler normal(seed);
  for (float& v : out.mutable_data()) v = static_cast<float>(normal.next());
  return out;
}

}  // namespace h2cache
