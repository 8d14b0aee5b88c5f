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

#include "h2cache/trace.h"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "h2cache/error.h"
#include "h2cache/io_util.h"

namespace h2cache {
namespace {

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) {
    out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
  }
}

std::uint32_t get_u32(const std::string& in, std::size_t offset) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) {
    v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[offset + i]))
         << (8 * i);
  }
  return v;
}

void put_tensor(std::string& out, const Tensor4& t) {
  for (float f : t.data()) put_u32(out, std::bit_cast<std::uint32_t>(f));
}

Tensor4 get_tensor(const std::string& in, std::size_t& offset,
                   const Shape& shape) {
  std::vector<float> data(shape.numel());
  for (float& f : data) {
    f = std::bit_cast<float>(get_u32(in, offset));
    offset += 4;
  }
  try {
    return Tensor4(shape, std::move(data));
  } catch (const Error& e) {
    throw Error(ErrorCode::kFormat, std::string("trace tensor: ") + e.what());
  }
}

std::uint32_t checked_u32(std::size_t v, const char* what) {
  if (v > UINT32_MAX) {
    throw Error(ErrorCode::kFormat, std::string(what) + " exceeds u32");
  }
  return static_cast<std::uint32_t>(v);
}

}  // namespace

Trace record_trace(const DenoiserBackend& backend, const NoiseSchedule& sched,
                   const Tensor4& z_T, const Conditioning& cond,
                   std::size_t sampler_steps) {
  Trace trace;
  trace.shape = z_T.shape();
  trace.steps.reserve(sampler_steps);
  sample_loop(NoCachePolicy{}, backend, sched, z_T, cond, sampler_steps,
              [&](const StepRecord& rec) {
                trace.steps.push_back(
                    {rec.z_t, rec.result.z_prime, rec.result.eps});
              });
  return trace;
}

std::string serialize_trace(const Trace& trace) {
  const Shape& s = trace.shape;
  std::string out;
  out.reserve(kTraceHeaderBytes + trace.steps.size() * 3 * s.numel() * 4);
  out.append(kTraceMagic, 4);
  out.push_back(static_cast<char>(kTraceVersion));
  put_u32(out, checked_u32(trace.steps.size(), "step count"));
  put_u32(out, checked_u32(s.batch, "batch"));
  put_u32(out, checked_u32(s.channels, "channels"));
  put_u32(out, checked_u32(s.height, "height"));
  put_u32(out, checked_u32(s.width, "width"));
  for (const TraceStep& step : trace.steps) {
    for (const Tensor4* t : {&step.z_t, &step.z_prime, &step.eps}) {
      if (!(t->shape() == s)) {
        throw Error(ErrorCode::kFormat,
                    "trace step tensor " + to_string(t->shape()) +
                        " does not match header shape " + to_string(s));
      }
      put_tensor(out, *t);
    }
  }
  return out;
}

Trace parse_trace(const std::string& bytes) {
  if (bytes.size() < kTraceHeaderBytes ||
      std::memcmp(bytes.data(), kTraceMagic, 4) != 0) {
    throw Error(ErrorCode::kFormat, "not a trace file (bad magic)");
  }
  const auto version = static_cast<unsigned char>(bytes[4]);
  if (version != kTraceVersion) {
    throw Error(ErrorCode::kFormat,
                "unsupported trace version " + std::to_string(version));
  }
  Trace trace;
  const std::uint32_t steps = get_u32(bytes, 5);
  trace.shape = {get_u32(bytes, 9), get_u32(bytes, 13), get_u32(bytes, 17),
                 get_u32(bytes, 21)};
  const Shape& s = trace.shape;
  if (s.batch == 0 || s.channels == 0 || s.height == 0 || s.width == 0) {
    throw Error(ErrorCode::kFormat, "trace shape has a zero extent");
  }
  const std::uint64_t expected =
      kTraceHeaderBytes +
      static_cast<std::uint64_t>(steps) * 3 * s.numel() * sizeof(float);
  if (bytes.size() != expected) {
    throw Error(ErrorCode::kFormat,
                "trace is " + std::to_string(bytes.size()) +
                    " bytes, header implies " + std::to_string(expected));
  }
  std::size_t offset = kTraceHeaderBytes;
  trace.steps.reserve(steps);
  for (std::uint32_t i = 0; i < steps; ++i) {
    TraceStep step;
    step.z_t = get_tensor(bytes, offset, s);
    step.z_prime = get_tensor(bytes, offset, s);
    step.eps = get_tensor(bytes, offset, s);
    trace.steps.push_back(std::move(step));
  }
  return trace;
}

void write_trace(const Trace& trace, const std::filesystem::path& path) {
  write_file_atomic(path, serialize_trace(trace));
}

Trace read_trace(const std::filesystem::path& path) {
  return parse_trace(read_file(path));
}

RunStats replay_policy(const Trace& trace, const Policy& policy) {
  RunStats stats;
  CacheState state;
  for (std::size_t i = 0; i < trace.steps.size(); ++i) {
    const TraceStep& rec = trace.steps[i];
    StepResult r;
    r.z_prime = rec.z_prime;
    r.eps = rec.eps;
    r.outcome = StepOutcome::full_compute();

    if (state.populated && !std::holds_alternative<NoCachePolicy>(policy)) {
      if (const auto* block = std::get_if<BlockCachePolicy>(&policy)) {
        r.metric1 = metric_evaluate(block->metric, rec.z_t, state.z_cache_in);
        if (is_hit(r.metric1, block->tau)) {
          r.outcome = StepOutcome::joint_hit();
        }
      } else {
        const H2Config& cfg = std::get<H2Policy>(policy).cfg;
        r.metric1 = metric_evaluate(cfg.metric1, rec.z_t, state.z_cache_in);
        if (is_hit(r.metric1, cfg.tau1)) {
          r.outcome = StepOutcome::joint_hit();
        } else {
          r.metric2 =
              metric_evaluate(cfg.metric2, rec.z_prime, state.z_prime_cache);
          if (is_hit(r.metric2, cfg.tau2)) {
            r.outcome = StepOutcome::detail_hit();
            r.eps = state.eps_cache;
          }
        }
      }
    }

    if (r.outcome.kind != OutcomeKind::kJointHit) {
      state.z_cache_in = rec.z_t;
      state.z_prime_cache = r.z_prime;
      state.eps_cache = r.eps;
      state.source_step = i;
      state.populated = true;
    }
    stats.record(r, 0.0);
  }
  return stats;
}

}  // namespace h2cache
