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

#include <cstdint>

namespace h2cache {

// xoshiro256** 1.0 (Blackman & Vigna), state seeded by expanding a 64-bit
// seed with SplitMix64. Integer output is identical on every platform.
class Xoshiro256 {
 public:
  explicit Xoshiro256(std::uint64_t seed);

  std::uint64_t next();

  // Uniform double in [0, 1) built from the top 53 bits.
  double next_unit();

 private:
  std::uint64_t s_[4];
};

// Box-Muller transform over Xoshiro256. Each pair of uniforms (u1, u2)
// yields r*cos(2*pi*u2) then r*sin(2*pi*u2) with r = sqrt(-2*ln(1 - u1)),
// so the stream is consumed two uniforms per two normals, in that order.
class NormalSampler {
 public:
  explicit NormalSampler(std::uint64_t seed) : rng_(seed) {}

  double next();

 private:
  Xoshiro256 rng_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// Derives a stream-specific seed; used to fan one user seed out to
// independent draws (per-step noise, weight init, ...).
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace h2cache
