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
#include <filesystem>
#include <string>
#include <vector>

#include "h2cache/cache_engine.h"
#include "h2cache/tensor.h"

namespace h2cache {

// Trace file layout (all integers and floats little-endian):
//
//   offset 0   4 bytes  magic "H2TR"
//   offset 4   1 byte   format version (1)
//   offset 5   u32      step count T
//   offset 9   u32 x 4  shape B, C, H, W
//   offset 25  T records, each z_t, z'_t, eps as B*C*H*W float32,
//              row-major (B, C, H, W)
inline constexpr char kTraceMagic[4] = {'H', '2', 'T', 'R'};
inline constexpr unsigned char kTraceVersion = 1;
inline constexpr std::size_t kTraceHeaderBytes = 25;

struct TraceStep {
  Tensor4 z_t;
  Tensor4 z_prime;
  Tensor4 eps;
};

// Cache-free ground truth: per-step tensors from a NoCache run.
struct Trace {
  Shape shape;
  std::vector<TraceStep> steps;
};

Trace record_trace(const DenoiserBackend& backend, const NoiseSchedule& sched,
                   const Tensor4& z_T, const Conditioning& cond,
                   std::size_t sampler_steps);

std::string serialize_trace(const Trace& trace);
Trace parse_trace(const std::string& bytes);

// Writes to a sibling temporary file and renames it into place.
void write_trace(const Trace& trace, const std::filesystem::path& path);
Trace read_trace(const std::filesystem::path& path);

// Replays cache decisions against the recorded tensors. Decisions never
// alter the trajectory: a step's "fresh" z' and eps are the recorded ones.
// Timing fields and final_latent are left empty.
RunStats replay_policy(const Trace& trace, const Policy& policy);

}  // namespace h2cache
