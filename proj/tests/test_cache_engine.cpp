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

#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <vector>

#include "doctest.h"
#include "h2cache/cache_engine.h"
#include "h2cache/denoiser.h"
#include "h2cache/diffusion.h"
#include "h2cache/error.h"
#include "h2cache/tensor.h"

namespace h2cache {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
const Shape kShape{1, 4, 16, 16};

// Forwards to an inner backend and counts stage calls.
class CountingBackend final : public DenoiserBackend {
 public:
  explicit CountingBackend(BackendPtr inner) : inner_(std::move(inner)) {}
  Tensor4 stage1(const Tensor4& z, std::size_t t,
                 const Conditioning& c) const override {
    ++stage1_calls;
    return inner_->stage1(z, t, c);
  }
  Tensor4 stage2(const Tensor4& zp, std::size_t t,
                 const Conditioning& c) const override {
    ++stage2_calls;
    return inner_->stage2(zp, t, c);
  }
  std::string name() const override { return inner_->name(); }

  mutable std::atomic<std::size_t> stage1_calls{0};
  mutable std::atomic<std::size_t> stage2_calls{0};

 private:
  BackendPtr inner_;
};

struct Fixture {
  NoiseSchedule sched = build_linear_schedule(1000, 1e-4, 2e-2);
  Conditioning cond = Conditioning::seeded(8, 11);
  BackendPtr smooth =
      std::make_shared<SmoothRandomBackend>(kShape, 7, sched, 8);
  BackendPtr analytic = std::make_shared<AnalyticGaussianBackend>(
      Tensor4::filled(kShape, 0.5f), 0.5, sched);

  RunStats run(const Policy& p, const DenoiserBackend& be, std::uint64_t seed,
               std::size_t steps = 50, const StepObserver& obs = {}) const {
    return sample_loop(p, be, sched, seeded_gaussian(kShape, seed), cond,
                       steps, obs);
  }
};

H2Policy h2(double tau1, double tau2) {
  H2Policy p;
  p.cfg.tau1 = tau1;
  p.cfg.tau2 = tau2;
  return p;
}

bool same_outcomes(const RunStats& a, const RunStats& b) {
  return a.outcomes == b.outcomes;
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::kInvalidArgument;
}

}  // namespace

TEST_CASE("is_hit is strict") {
  CHECK_FALSE(is_hit(0.0, 0.0));
  CHECK(is_hit(0.0, 1e-300));
  CHECK(is_hit(1e300, kInf));
  CHECK_FALSE(is_hit(0.5, 0.5));
}

TEST_CASE("no-cache loop computes every step") {
  Fixture f;
  CountingBackend be(f.smooth);
  RunStats s = f.run(NoCachePolicy{}, be, 0);
  CHECK(s.full_computes == 50);
  CHECK(s.joint_hits + s.detail_hits == 0);
  CHECK(be.stage1_calls == 50);
  CHECK(be.stage2_calls == 50);
  CHECK(s.metric_checks == 0);
  CHECK(s.timesteps.front() == 1000);
  CHECK(s.timesteps.back() == 20);
}

TEST_CASE("infinite tau1 reuses the first step everywhere") {
  Fixture f;
  CountingBackend be(f.smooth);
  Tensor4 first_eps;
  bool eps_reused = true;
  RunStats s = f.run(h2(kInf, 0.0), be, 3, 50, [&](const StepRecord& r) {
    if (r.index == 0) {
      first_eps = r.result.eps;
      return;
    }
    eps_reused = eps_reused && r.result.eps.bitwise_equal(first_eps) &&
                 r.state.source_step == 1000;
  });
  CHECK(s.full_computes == 1);
  CHECK(s.joint_hits == 49);
  CHECK(be.stage1_calls == 1);
  CHECK(be.stage2_calls == 1);
  CHECK(eps_reused);
}

TEST_CASE("zero thresholds reproduce the no-cache trajectory") {
  Fixture f;
  for (const BackendPtr& be : {f.smooth, f.analytic}) {
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
      RunStats base = f.run(NoCachePolicy{}, *be, seed);
      RunStats cached = f.run(h2(0.0, 0.0), *be, seed);
      CHECK(cached.full_computes == 50);
      CHECK(cached.final_latent.bitwise_equal(base.final_latent));
    }
  }
}

TEST_CASE("infinite tau2 runs stage 2 once") {
  Fixture f;
  CountingBackend be(f.smooth);
  RunStats s = f.run(h2(0.0, kInf), be, 4);
  CHECK(be.stage2_calls == 1);
  CHECK(be.stage1_calls == 50);
  CHECK(s.full_computes == 1);
  CHECK(s.detail_hits == 49);
}

TEST_CASE("block cache extremes") {
  Fixture f;
  RunStats all = f.run(BlockCachePolicy{kInf, FullL2{}}, *f.smooth, 5);
  CHECK(all.full_computes == 1);
  CHECK(all.joint_hits == 49);

  RunStats none = f.run(BlockCachePolicy{0.0, FullL2{}}, *f.smooth, 5);
  RunStats base = f.run(NoCachePolicy{}, *f.smooth, 5);
  CHECK(none.full_computes == 50);
  CHECK(none.final_latent.bitwise_equal(base.final_latent));
}

TEST_CASE("block cache equals H2 with tau2 = 0") {
  Fixture f;
  const std::vector<double> taus{0.0, 0.02, 0.1, 0.3};
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const BackendPtr& be = seed % 2 ? f.analytic : f.smooth;
    const double tau = taus[seed % taus.size()];
    const SimilarityMetric metric = PfsRelDiff{{16}};
    H2Policy hp = h2(tau, 0.0);
    hp.cfg.metric1 = metric;

    std::vector<CacheState> h2_states;
    std::vector<Tensor4> h2_next;
    RunStats a = f.run(hp, *be, seed, 50, [&](const StepRecord& r) {
      h2_states.push_back(r.state);
      h2_next.push_back(r.result.next);
    });
    std::size_t step = 0;
    bool same_steps = true;
    RunStats b = f.run(BlockCachePolicy{tau, metric}, *be, seed, 50,
                       [&](const StepRecord& r) {
                         const CacheState& o = h2_states[step];
                         same_steps = same_steps &&
                                      r.result.next.bitwise_equal(h2_next[step]) &&
                                      r.state.source_step == o.source_step &&
                                      r.state.z_cache_in.bitwise_equal(o.z_cache_in) &&
                                      r.state.z_prime_cache.bitwise_equal(o.z_prime_cache) &&
                                      r.state.eps_cache.bitwise_equal(o.eps_cache);
                         ++step;
                       });
    CAPTURE(seed);
    CHECK(same_outcomes(a, b));
    CHECK(same_steps);
    CHECK(a.final_latent.bitwise_equal(b.final_latent));
  }
}

TEST_CASE("outcome accounting and cache atomicity") {
  Fixture f;
  for (const auto& [tau1, tau2] :
       std::vector<std::pair<double, double>>{{0.15, 0.18}, {0.05, 0.3},
                                              {0.0, 0.1}, {0.5, 0.5}}) {
    CountingBackend be(f.smooth);
    bool atomic = true;
    std::size_t last_source = 0;
    RunStats s = f.run(h2(tau1, tau2), be, 8, 50, [&](const StepRecord& r) {
      const CacheState& st = r.state;
      if (r.result.outcome.kind == OutcomeKind::kJointHit) {
        atomic = atomic && st.source_step == last_source;
      } else {
        atomic = atomic && st.source_step == r.t &&
                 st.z_cache_in.bitwise_equal(r.z_t) &&
                 st.z_prime_cache.bitwise_equal(r.result.z_prime) &&
                 st.eps_cache.bitwise_equal(r.result.eps);
      }
      last_source = st.source_step;
    });
    CAPTURE(tau1);
    CAPTURE(tau2);
    CHECK(atomic);
    CHECK(s.outcomes.front() == StepOutcome::full_compute());
    CHECK(s.joint_hits + s.detail_hits + s.full_computes == 50);
    CHECK(be.stage1_calls == s.detail_hits + s.full_computes);
    CHECK(be.stage2_calls == s.full_computes);
    CHECK(s.stage1_calls == be.stage1_calls);
    CHECK(s.stage2_calls == be.stage2_calls);
    CHECK(std::isnan(s.metric1_values.front()));
    for (std::size_t i = 0; i < s.steps(); ++i) {
      const bool joint = s.outcomes[i].kind == OutcomeKind::kJointHit;
      if (joint) CHECK(std::isnan(s.metric2_values[i]));
      if (i > 0) CHECK(s.metric1_values[i] >= 0.0);
    }
  }
}

TEST_CASE("default thresholds produce every outcome kind") {
  Fixture f;
  RunStats s = f.run(h2(0.15, 0.18), *f.smooth, 0);
  CHECK(s.joint_hits > 0);
  CHECK(s.full_computes > 1);
}

TEST_CASE("sample_loop is deterministic") {
  Fixture f;
  for (const Policy& p : {Policy{NoCachePolicy{}}, Policy{h2(0.15, 0.18)},
                          Policy{BlockCachePolicy{0.1, PfsRelDiff{{8}}}}}) {
    RunStats a = f.run(p, *f.smooth, 12);
    RunStats b = f.run(p, *f.smooth, 12);
    CHECK(a.final_latent.bitwise_equal(b.final_latent));
    CHECK(same_outcomes(a, b));
  }
}

TEST_CASE("mismatched cache is reported as corruption") {
  Fixture f;
  StepContext ctx{*f.smooth, f.sched, f.cond};
  CacheState state;
  state.populated = true;
  state.z_cache_in = Tensor4({1, 4, 8, 8});
  state.z_prime_cache = Tensor4({1, 4, 8, 8});
  state.eps_cache = Tensor4({1, 4, 8, 8});
  Tensor4 z = seeded_gaussian(kShape, 1);
  CHECK(code_of([&] { h2_step(z, 1000, 980, ctx, H2Config{}, state); }) ==
        ErrorCode::kCacheCorruption);
  CHECK(code_of([&] {
          block_cache_step(z, 1000, 980, ctx, 0.1, FullL2{}, state);
        }) == ErrorCode::kCacheCorruption);

  CacheState half;
  half.populated = true;
  half.z_cache_in = z;
  CHECK(code_of([&] { h2_step(z, 1000, 980, ctx, H2Config{}, half); }) ==
        ErrorCode::kCacheCorruption);
}

TEST_CASE("cold cache step fills the cache") {
  Fixture f;
  StepContext ctx{*f.smooth, f.sched, f.cond};
  CacheState state;
  Tensor4 z = seeded_gaussian(kShape, 1);
  StepResult r = h2_step(z, 1000, 980, ctx, h2(kInf, kInf).cfg, state);
  CHECK(r.outcome == StepOutcome::full_compute());
  CHECK(state.populated);
  CHECK(state.source_step == 1000);
  CHECK(r.next.bitwise_equal(full_step(z, 1000, 980, ctx).next));

  StepResult hit = h2_step(r.next, 980, 960, ctx, h2(kInf, kInf).cfg, state);
  CHECK(hit.outcome == StepOutcome::joint_hit());
  CHECK(hit.eps.bitwise_equal(r.eps));
  CHECK(state.source_step == 1000);
}

TEST_CASE("policy names") {
  CHECK(std::string(policy_name(NoCachePolicy{})) == "none");
  CHECK(std::string(policy_name(BlockCachePolicy{})) == "block");
  CHECK(std::string(policy_name(H2Policy{})) == "h2");
  CHECK(std::string(outcome_name(OutcomeKind::kDetailHit)) == "detail_hit");
}

}  // namespace h2cache
