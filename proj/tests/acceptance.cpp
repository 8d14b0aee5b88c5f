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

// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "h2cache/cache_engine.h"
#include "h2cache/config.h"
#include "h2cache/denoiser.h"
#include "h2cache/diffusion.h"
#include "h2cache/error.h"
#include "h2cache/experiment.h"
#include "h2cache/io_util.h"
#include "h2cache/pfs.h"
#include "h2cache/random.h"
#include "h2cache/report.h"
#include "h2cache/trace.h"

namespace h2cache {
namespace {

using Clock = std::chrono::steady_clock;
constexpr double kInf = std::numeric_limits<double>::infinity();

double elapsed(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

ExperimentConfig base_config(const std::string& backend) {
  ExperimentConfig c;
  c.shape = {1, 4, 32, 32};
  c.steps = 50;
  c.backend = backend;
  c.cost = {0, 0};
  return c;
}

H2Policy h2(double tau1, double tau2, const SimilarityMetric& m1,
            const SimilarityMetric& m2) {
  return H2Policy{H2Config{tau1, tau2, m1, m2}};
}

// 1. Zero thresholds reproduce the no-cache run bit for bit.
Verdict degenerate_identity() {
  const auto t0 = Clock::now();
  std::size_t mismatches = 0, runs = 0;
  for (const char* backend : {"smooth", "analytic"}) {
    ExperimentConfig c = base_config(backend);
    c.seeds.clear();
    for (std::uint64_t s = 0; s < 20; ++s) c.seeds.push_back(s);
    PairedRunner runner(c);
    const H2Policy p = h2(0.0, 0.0, PfsRelDiff{{c.dp1}}, PfsRelDiff{{c.dp2}});
    for (std::size_t i = 0; i < c.seeds.size(); ++i, ++runs) {
      const Tensor4& z = runner.initial_latent(i);
      RunStats base = sample_loop(NoCachePolicy{}, runner.backend(),
                                  runner.schedule(), z, runner.conditioning(),
                                  c.steps);
      RunStats cached = sample_loop(p, runner.backend(), runner.schedule(), z,
                                    runner.conditioning(), c.steps);
      if (!cached.final_latent.bitwise_equal(base.final_latent) ||
          cached.full_computes != c.steps) {
        ++mismatches;
      }
    }
  }
  const double secs = elapsed(t0);
  return {mismatches == 0 && secs < 60.0,
          fmt("%zu/%zu runs bitwise equal, %.1fs (limit 60s)",
              runs - mismatches, runs, secs)};
}

// 2. H2(tau, 0) and the block cache agree step for step.
Verdict baseline_reduction() {
  const auto t0 = Clock::now();
  const std::vector<double> taus{0.0, 0.01, 0.03, 0.06, 0.1, 0.15, 0.3, kInf};
  std::size_t bad = 0, runs = 0, hits = 0;
  for (const char* backend : {"smooth", "analytic"}) {
    ExperimentConfig c = base_config(backend);
    c.seeds.clear();
    for (std::uint64_t s = 0; s < 10; ++s) c.seeds.push_back(s);
    PairedRunner runner(c);
    const SimilarityMetric m = PfsRelDiff{{c.dp1}};
    for (double tau : taus) {
      for (std::size_t i = 0; i < c.seeds.size(); ++i, ++runs) {
        const Tensor4& z = runner.initial_latent(i);
        RunStats a = sample_loop(h2(tau, 0.0, m, PfsRelDiff{{c.dp2}}),
                                 runner.backend(), runner.schedule(), z,
                                 runner.conditioning(), c.steps);
        RunStats b = sample_loop(BlockCachePolicy{tau, m}, runner.backend(),
                                 runner.schedule(), z, runner.conditioning(),
                                 c.steps);
        hits += a.joint_hits;
        if (a.outcomes != b.outcomes ||
            !a.final_latent.bitwise_equal(b.final_latent)) {
          ++bad;
        }
      }
    }
  }
  const double secs = elapsed(t0);
  return {bad == 0 && secs < 120.0,
          fmt("%zu/%zu runs identical (%zu joint hits exercised), %.1fs "
              "(limit 120s)",
              runs - bad, runs, hits, secs)};
}

// 3. Predicting z0 from a closed-form forward sample recovers z0.
Verdict ddim_round_trip() {
  const NoiseSchedule s = build_linear_schedule(
      kDefaultScheduleSteps, kDefaultBetaStart, kDefaultBetaEnd);
  const Shape shp{1, 4, 16, 16};
  double worst = 0.0;
  std::size_t checked = 0;
  for (std::uint64_t k = 0; k < 100; ++k) {
    const Tensor4 z0 = seeded_gaussian(shp, mix_seed(k, 1));
    const Tensor4 eps = seeded_gaussian(shp, mix_seed(k, 2));
    const double z0_norm = l2_norm(z0);
    for (std::size_t t = 1; t <= s.steps(); ++t) {
      if (s.alpha_bar(t) < 1e-3) continue;
      const Tensor4 back =
          ddim_predict_z0(forward_diffuse_closed(z0, t, eps, s), eps, t, s);
      worst = std::max(worst, l2_distance(back, z0) / z0_norm);
      ++checked;
    }
  }
  return {worst <= 1e-4 && checked > 0,
          fmt("max relative error %.3g over %zu (tensor, t) pairs "
              "(limit 1e-4)",
              worst, checked)};
}

// 4. The analytic predictor beats every fixed perturbation of itself.
Verdict analytic_optimality() {
  const NoiseSchedule s = build_linear_schedule(
      kDefaultScheduleSteps, kDefaultBetaStart, kDefaultBetaEnd);
  const Shape shp{1, 4, 8, 8};
  const Tensor4 mu = seeded_gaussian(shp, 500);
  const double sigma = 0.7;
  const AnalyticGaussianBackend be(mu, sigma, s);
  const Conditioning none;

  // Five constant shifts and five seeded patterns of varying size.
  std::vector<Tensor4> offsets;
  for (float d : {-0.3f, -0.1f, 0.1f, 0.25f, 0.5f})
    offsets.push_back(Tensor4::filled(shp, d));
  for (std::uint64_t k = 0; k < 5; ++k)
    offsets.push_back(scale(seeded_gaussian(shp, 900 + k), 0.1 * (k + 1)));

  const std::size_t n = 2000;
  double base = 0.0;
  std::vector<double> perturbed(offsets.size(), 0.0);
  Xoshiro256 pick(4242);
  for (std::uint64_t i = 0; i < n; ++i) {
    const std::size_t t = 1 + pick.next() % s.steps();
    const Tensor4 z0 =
        linear_combination(1.0, mu, sigma, seeded_gaussian(shp, mix_seed(i, 7)));
    const Tensor4 eps = seeded_gaussian(shp, mix_seed(i, 8));
    const Tensor4 zt = forward_diffuse_closed(z0, t, eps, s);
    const Tensor4 pred = be.stage2(be.stage1(zt, t, none), t, none);
    base += eps_mse_loss(eps, pred);
    for (std::size_t k = 0; k < offsets.size(); ++k)
      perturbed[k] +=
          eps_mse_loss(eps, linear_combination(1.0, pred, 1.0, offsets[k]));
  }
  std::size_t beaten = 0;
  double margin = kInf;
  for (double p : perturbed) {
    beaten += base <= p;
    margin = std::min(margin, (p - base) / n);
  }
  return {beaten == offsets.size(),
          fmt("analytic loss %.5f <= perturbed for %zu/%zu offsets over %zu "
              "samples (smallest gap %.5f)",
              base / n, beaten, offsets.size(), n, margin)};
}

double full_rel_mean_abs(const Tensor4& cur, const Tensor4& ref) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < cur.numel(); ++i) {
    num += std::fabs(static_cast<double>(cur.data()[i] - ref.data()[i]));
    den += std::fabs(static_cast<double>(ref.data()[i]));
  }
  const double n = static_cast<double>(cur.numel());
  return (num / n) / std::max(den / n, kDivisionEpsilon);
}

// 5. Identity for large divisors and thumbnail extents on a grid.
Verdict pfs_identity() {
  std::size_t failures = 0, cases = 0;
  for (std::size_t h : {1u, 3u, 8u, 17u, 32u, 33u}) {
    for (std::size_t w : {h, h + 5}) {
      const Shape shp{2, 3, h, w};
      const Tensor4 a = seeded_gaussian(shp, h * 100 + w);
      const Tensor4 b = seeded_gaussian(shp, h * 100 + w + 1);
      for (std::size_t div : {h, h + 1, 2 * h, std::size_t{4096}}) {
        ++cases;
        const double d = metric_evaluate(PfsRelDiff{{div}}, a, b);
        if (!summarize(a, {div}).bitwise_equal(a) ||
            d != full_rel_mean_abs(a, b)) {
          ++failures;
        }
      }
    }
  }
  for (std::size_t h = 1; h <= 40; ++h) {
    for (std::size_t w = 1; w <= 40; ++w) {
      for (std::size_t k = 1; k <= std::min(h, w); ++k) {
        ++cases;
        const auto [th, tw] = thumbnail_dims(h, w, k);
        // Count whole windows directly.
        std::size_t rows = 0, cols = 0;
        while ((rows + 1) * k <= h) ++rows;
        while ((cols + 1) * k <= w) ++cols;
        if (th != rows || tw != cols) ++failures;
      }
      for (std::size_t k : {h + 1, w + 1}) {
        ++cases;
        try {
          thumbnail_dims(h, w, k);
          ++failures;
        } catch (const Error& e) {
          if (e.code() != ErrorCode::kKernelTooLarge) ++failures;
        }
      }
    }
  }
  for (std::size_t h : {5u, 9u, 13u, 30u}) {
    for (std::size_t k : {2u, 3u, 4u}) {
      ++cases;
      const Tensor4 p = avg_pool_2d(seeded_gaussian({1, 1, h, h + 3}, k), k);
      const auto [th, tw] = thumbnail_dims(h, h + 3, k);
      if (p.shape().height != th || p.shape().width != tw) ++failures;
    }
  }
  return {failures == 0,
          fmt("%zu/%zu identity and extent cases hold", cases - failures,
              cases)};
}

// 6. Pooled checks are at least twice as fast as full relative L2.
Verdict pfs_efficiency() {
  const Shape shp{1, 1, 256, 256};
  const Tensor4 a = seeded_gaussian(shp, 1);
  const Tensor4 b = seeded_gaussian(shp, 2);
  const std::size_t trials = 20;
  std::vector<std::size_t> divisors{64, 32, 16};  // kernels 4, 8, 16
  std::vector<std::vector<double>> pfs_times(divisors.size());
  std::vector<double> full_times;
  volatile double sink = 0.0;
  auto time_one = [&](const SimilarityMetric& m) {
    const auto t0 = Clock::now();
    sink = sink + metric_evaluate(m, a, b);
    return elapsed(t0);
  };
  for (std::size_t i = 0; i < 5; ++i) {
    time_one(FullRelL2{});
    for (std::size_t d : divisors) time_one(PfsRelDiff{{d}});
  }
  for (std::size_t i = 0; i < trials; ++i) {
    full_times.push_back(time_one(FullRelL2{}));
    for (std::size_t k = 0; k < divisors.size(); ++k)
      pfs_times[k].push_back(time_one(PfsRelDiff{{divisors[k]}}));
  }
  const double full = median(full_times);
  bool ok = true;
  std::string detail = fmt("full_rel_l2 %.1fus", full * 1e6);
  for (std::size_t k = 0; k < divisors.size(); ++k) {
    const double t = median(pfs_times[k]);
    const double ratio = full / t;
    ok = ok && ratio >= 2.0;
    detail += fmt("; s_k=%zu %.1fus (%.2fx)", kernel_size(256, divisors[k]),
                  t * 1e6, ratio);
  }
  return {ok, detail + " (need >= 2x, median of 20)"};
}

// 7. Speedup grows with the number of sampler steps.
Verdict step_scaling() {
  const auto t0 = Clock::now();
  const std::vector<std::size_t> steps{10, 30, 100};
  std::size_t good = 0;
  std::string detail;
  for (std::uint64_t campaign = 0; campaign < 5; ++campaign) {
    ExperimentConfig c = base_config("smooth");
    c.cost = CostModel{};
    c.tau1 = 0.15;
    c.tau2 = 0.18;
    c.seeds = {campaign};
    c.timing_repeats = 3;
    Report r = sweep_steps(c, steps);
    std::vector<double> sp;
    for (std::size_t i = 0; i < steps.size(); ++i)
      sp.push_back(r.table.number(i, "speedup"));
    const bool inc = sp[0] < sp[1] && sp[1] < sp[2];
    good += inc;
    detail += fmt("%s[%.2f, %.2f, %.2f]", campaign ? " " : "", sp[0], sp[1],
                  sp[2]);
  }
  ExperimentConfig c = base_config("smooth");
  c.cost = CostModel{};
  c.steps = 100;
  c.tau1 = kInf;
  c.seeds = {0};
  c.timing_repeats = 3;
  const double inf_speedup = run_experiment(c).runs.at(0).speedup;
  const double secs = elapsed(t0);
  return {good >= 4 && inf_speedup > 10.0 && secs < 600.0,
          fmt("increasing over T=10,30,100 in %zu/5 campaigns %s; "
              "tau1=inf at T=100: %.1fx (need > 10x); %.0fs (limit 600s)",
              good, detail.c_str(), inf_speedup, secs)};
}

// 8. Quality falls as caching grows.
Verdict quality_tradeoff() {
  ExperimentConfig c = base_config("smooth");
  c.timing_repeats = 1;
  c.warmup = false;
  const std::vector<double> tau1s{0.0, 0.05, 0.15, 0.5, kInf};
  const std::vector<double> tau2s{0.0, 0.05, 0.1, 0.18, 0.3, 0.6};
  const Report r = sweep_thresholds(c, tau1s, tau2s);
  const Table& t = r.table;

  const bool origin_inf = std::isinf(t.number(0, "psnr_db")) &&
                          t.number(0, "psnr_db") > 0;
  bool finite_past_half = true;
  std::size_t heavy = 0;
  std::size_t worst_row_inversions = 0;
  for (std::size_t i = 0; i < tau1s.size(); ++i) {
    std::vector<std::pair<double, double>> row;  // (hit fraction, psnr)
    for (std::size_t j = 0; j < tau2s.size(); ++j) {
      const std::size_t k = i * tau2s.size() + j;
      const double hf = t.number(k, "hit_fraction");
      const double p = t.number(k, "psnr_db");
      if (hf > 0.5) {
        ++heavy;
        finite_past_half = finite_past_half && std::isfinite(p);
      }
      row.emplace_back(hf, p);
    }
    std::stable_sort(row.begin(), row.end(),
                     [](const auto& x, const auto& y) { return x.first < y.first; });
    std::size_t inversions = 0;
    for (std::size_t j = 1; j < row.size(); ++j) {
      if (row[j].first > row[j - 1].first && row[j].second > row[j - 1].second)
        ++inversions;
    }
    worst_row_inversions = std::max(worst_row_inversions, inversions);
  }
  bool markers = true;
  for (const char* m : {"best_psnr", "best_ssim", "best_rel_l2", "best_speedup"}) {
    double total = 0;
    for (std::size_t k = 0; k < t.rows.size(); ++k) total += t.number(k, m);
    markers = markers && total == 1.0;
  }
  const double last_psnr = t.number(t.rows.size() - 1, "psnr_db");
  return {origin_inf && finite_past_half && heavy > 0 && markers &&
              worst_row_inversions <= 1,
          fmt("psnr(0,0)=%s; %zu cells past 50%% hits all finite=%s; "
              "max inversions per row %zu (limit 1); markers=%s; "
              "psnr(inf,%.2f)=%.2f dB",
              format_double(t.number(0, "psnr_db")).c_str(), heavy,
              finite_past_half ? "yes" : "no", worst_row_inversions,
              markers ? "yes" : "no", tau2s.back(), last_psnr)};
}

// 9. Replayed metric values equal the live ones; traces re-serialize
// byte for byte.
Verdict trace_round_trip() {
  ExperimentConfig c = base_config("smooth");
  c.seeds = {3};
  PairedRunner runner(c);
  const Trace tr =
      record_trace(runner.backend(), runner.schedule(), runner.initial_latent(0),
                   runner.conditioning(), c.steps);
  const H2Policy p = h2(0.0, 0.0, PfsRelDiff{{c.dp1}}, PfsRelDiff{{c.dp2}});
  const RunStats live =
      sample_loop(p, runner.backend(), runner.schedule(),
                  runner.initial_latent(0), runner.conditioning(), c.steps);

  const auto path =
      std::filesystem::temp_directory_path() / "h2cache_acceptance.h2tr";
  write_trace(tr, path);
  const std::string bytes = read_file(path);
  const Trace loaded = read_trace(path);
  std::filesystem::remove(path);
  const RunStats rep = replay_policy(loaded, p);

  double worst = 0.0;
  std::size_t compared = 0;
  bool shape_ok = rep.steps() == live.steps();
  for (std::size_t i = 0; shape_ok && i < live.steps(); ++i) {
    const double pairs[2][2] = {{live.metric1_values[i], rep.metric1_values[i]},
                                {live.metric2_values[i], rep.metric2_values[i]}};
    for (const auto& pr : pairs) {
      if (std::isnan(pr[0]) != std::isnan(pr[1])) shape_ok = false;
      if (std::isnan(pr[0])) continue;
      worst = std::max(worst, std::fabs(pr[0] - pr[1]) /
                                  std::max(std::fabs(pr[0]), 1e-300));
      ++compared;
    }
  }
  const bool bytes_ok = serialize_trace(loaded) == bytes &&
                        serialize_trace(tr) == bytes &&
                        serialize_trace(parse_trace(bytes)) == bytes;
  return {shape_ok && compared > 0 && worst <= 1e-6 && bytes_ok,
          fmt("%zu metric values, max relative gap %.3g (limit 1e-6); "
              "re-serialization byte-identical=%s (%zu bytes)",
              compared, worst, bytes_ok ? "yes" : "no", bytes.size())};
}

// 10. Hit decisions are monotone in tau for fixed pairs.
Verdict hit_monotonicity() {
  ExperimentConfig c = base_config("smooth");
  c.seeds = {5};
  PairedRunner runner(c);
  const Trace tr =
      record_trace(runner.backend(), runner.schedule(), runner.initial_latent(0),
                   runner.conditioning(), c.steps);
  std::vector<double> taus{0.0};
  for (int e = -60; e <= 40; ++e) taus.push_back(std::pow(1.5, e));
  taus.push_back(kInf);

  const SimilarityMetric metric1 = PfsRelDiff{{c.dp1}};
  const SimilarityMetric metric2 = PfsRelDiff{{c.dp2}};
  std::size_t comparisons = 0, violations = 0, flips = 0;
  auto check_pair = [&](const SimilarityMetric& m, const Tensor4& cur,
                        const Tensor4& cached) {
    const double v = metric_evaluate(m, cur, cached);
    bool seen_hit = false;
    for (double tau : taus) {
      const bool hit = is_hit(v, tau);
      if (seen_hit && !hit) ++violations;
      if (!seen_hit && hit && tau != taus.front()) ++flips;
      seen_hit = seen_hit || hit;
      ++comparisons;
    }
  };
  for (std::size_t i = 1; i < tr.steps.size(); ++i) {
    for (std::size_t lag : {1u, 2u, 5u}) {
      if (lag > i) continue;
      check_pair(metric1, tr.steps[i].z_t, tr.steps[i - lag].z_t);
      check_pair(metric2, tr.steps[i].z_prime, tr.steps[i - lag].z_prime);
    }
  }
  return {violations == 0 && flips > 0,
          fmt("%zu threshold comparisons, %zu violations, %zu miss-to-hit "
              "transitions exercised",
              comparisons, violations, flips)};
}

}  // namespace
}  // namespace h2cache

int main() {
  using namespace h2cache;
  struct Criterion {
    const char* name;
    std::function<Verdict()> run;
  };
  const std::vector<Criterion> criteria{
      {"degenerate-threshold identity", degenerate_identity},
      {"block cache reduction", baseline_reduction},
      {"ddim round trip", ddim_round_trip},
      {"analytic denoiser optimality", analytic_optimality},
      {"pfs identity and extents", pfs_identity},
      {"pfs efficiency", pfs_efficiency},
      {"step-scaling trend", step_scaling},
      {"quality-speed tradeoff", quality_tradeoff},
      {"trace round trip", trace_round_trip},
      {"hit monotonicity", hit_monotonicity},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Verdict v;
    try {
      v = criteria[i].run();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    failed += !v.pass;
    std::printf("criterion %zu %s: %s - %s\n", i + 1, v.pass ? "PASS" : "FAIL",
                criteria[i].name, v.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - failed,
              criteria.size());
  return failed ? 1 : 0;
}
