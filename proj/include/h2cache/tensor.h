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
#include <span>
#include <string>
#include <vector>

namespace h2cache {

// Extents of a rank-4 (B, C, H, W) tensor. All four must be >= 1.
struct Shape {
  std::size_t batch = 1;
  std::size_t channels = 1;
  std::size_t height = 1;
  std::size_t width = 1;

  std::size_t numel() const { return batch * channels * height * width; }
  std::size_t plane() const { return height * width; }

  bool operator==(const Shape&) const = default;
};

std::string to_string(const Shape& shape);

// Dense float32 tensor, row-major in (B, C, H, W) order.
//
// Constructed values are validated: every extent is >= 1, the buffer length
// equals numel(), and every element is finite.
class Tensor4 {
 public:
  Tensor4() = default;

  // Zero-filled tensor of the given shape.
  explicit Tensor4(const Shape& shape);
  Tensor4(const Shape& shape, std::vector<float> data);

  static Tensor4 filled(const Shape& shape, float value);

  const Shape& shape() const { return shape_; }
  std::size_t numel() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::span<const float> data() const { return data_; }
  std::span<float> mutable_data() { return data_; }

  float at(std::size_t b, std::size_t c, std::size_t h, std::size_t w) const {
    return data_[((b * shape_.channels + c) * shape_.height + h) *
                     shape_.width +
                 w];
  }

  bool all_finite() const;

  // Bitwise equality of shape and payload (distinguishes -0 from +0).
  bool bitwise_equal(const Tensor4& other) const;

 private:
  Shape shape_{};
  std::vector<float> data_;
};

// A tensor of arbitrary rank prior to standardization.
struct RawTensor {
  std::vector<std::size_t> dims;
  std::vector<float> data;
};

// Reshapes rank 1..4 input to (B, C, H, W) without touching the data:
//   (N) -> (1,1,N,1), (L,D) -> (1,1,L,D), (B,L,D) -> (B,1,L,D).
Tensor4 standardize_to_4d(const RawTensor& raw);

// Output extent of a non-overlapping pooling window (kernel == stride).
// Trailing rows/cols that do not fill a full window are dropped.
std::size_t pooled_extent(std::size_t extent, std::size_t kernel);

// Symmetric average pooling with kernel = stride = `kernel`, applied to each
// (batch, channel) plane independently. Window sums are accumulated in
// double (see detail::pooled_row_sums for the order), scaled by 1/kernel^2
// and rounded to float.
Tensor4 avg_pool_2d(const Tensor4& t, std::size_t kernel);

namespace detail {

// Window sums for output row `out_row` of one plane. Column sums over the
// kernel rows are formed first (row by row into `columns`, which must hold
// `width` entries), then each window adds its `kernel` column sums left to
// right. `sums` receives pooled_extent(width, kernel) values.
void pooled_row_sums(const float* plane, std::size_t width,
                     std::size_t kernel, std::size_t out_row,
                     std::span<double> columns, std::span<double> sums);

}  // namespace detail

// Scalar reductions accumulate in double in flat row-major order.
double l2_distance(const Tensor4& a, const Tensor4& b);
double l2_norm(const Tensor4& t);
double mean_abs(const Tensor4& t);
double mean(const Tensor4& t);
double peak_to_peak(const Tensor4& t);

// Elementwise a - b, rounded to float.
Tensor4 subtract(const Tensor4& a, const Tensor4& b);

// Elementwise ka*a + kb*b, evaluated in double per element then rounded.
Tensor4 linear_combination(double ka, const Tensor4& a, double kb,
                           const Tensor4& b);

// Elementwise k*t, evaluated in double per element then rounded.
Tensor4 scale(const Tensor4& t, double k);

// Standard-normal samples from xoshiro256** + Box-Muller (see random.h).
Tensor4 seeded_gaussian(const Shape& shape, std::uint64_t seed);

// Throws kShapeMismatch naming `op` when shapes differ.
void require_same_shape(const Tensor4& a, const Tensor4& b, const char* op);

// Throws kNonFinite naming `op` when any element is NaN or Inf.
void require_finite(const Tensor4& t, const char* op);

}  // namespace h2cache
