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

#include "h2cache/experiment.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

#include "h2cache/error.h"
#include "h2cache/quality.h"
#include "h2cache/random.h"

namespace h2cache {
namespace {

using Clock = std::chrono::steady_clock;

constexpr std::uint64_t kInitialLatentStream = 0x5a17;

std::int64_t as_int(std::size_t v) { return static_cast<std::int64_t>(v); }

double quality_peak(const ExperimentConfig& cfg, const Tensor4& reference) {
  return cfg.psnr_peak > 0.0 ? cfg.psnr_peak : default_peak(reference);
}

}  // namespace

double median(std::vector<double> values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

double mean_of(const std::vector<double>& values) {
  if (values.empty()) return 0.0;
  return std::accumulate(values.begin(), values.end(), 0.0) /
         static_cast<double>(values.size());
}

double stddev_of(const std::vector<double>& values) {
  if (values.size() < 2) return 0.0;
  const double m = mean_of(values);
  double ss = 0.0;
  for (double v : values) ss += (v - m) * (v - m);
  return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

double mean_psnr(const std::vector<double>& values) {
  for (double v : values) {
    if (std::isinf(v)) return std::numeric_limits<double>::infinity();
  }
  return mean_of(values);
}

PairedRunner::PairedRunner(const ExperimentConfig& cfg)
    : cfg_(cfg), sched_(build_schedule(cfg)) {
  validate(cfg_);
  backend_ = build_backend(cfg_, sched_);
  cond_ = Conditioning::seeded(cfg_.cond_dim, cfg_.cond_seed);
  for (std::uint64_t seed : cfg_.seeds) {
    z_T_.push_back(
        seeded_gaussian(cfg_.shape, mix_seed(seed, kInitialLatentStream)));
  }
}

RunStats PairedRunner::sample(const Policy& policy,
                              std::size_t seed_index) const {
  return sample_loop(policy, *backend_, sched_, z_T_.at(seed_index), cond_,
                     cfg_.steps);
}

SeedRun PairedRunner::run_seed(const Policy& policy,
                               std::size_t seed_index) const {
  const bool self = std::holds_alternative<NoCachePolicy>(policy);
  if (cfg_.warmup) {
    sample(NoCachePolicy{}, seed_index);
    if (!self) sample(policy, seed_index);
  }
  SeedRun run;
  run.seed = cfg_.seeds.at(seed_index);
  std::vector<double> base_times;
  std::vector<double> cached_times;
  for (std::size_t r = 0; r < cfg_.timing_repeats; ++r) {
    run.baseline = sample(NoCachePolicy{}, seed_index);
    base_times.push_back(run.baseline.total_seconds);
    if (!self) {
      run.cached = sample(policy, seed_index);
      cached_times.push_back(run.cached.total_seconds);
    }
  }
  if (self) {
    run.cached = run.baseline;
    cached_times = base_times;
  }
  run.baseline_seconds = median(base_times);
  run.cached_seconds = median(cached_times);
  run.speedup = self ? 1.0 : run.baseline_seconds / run.cached_seconds;

  const Tensor4& ref = run.baseline.final_latent;
  const Tensor4& test = run.cached.final_latent;
  run.psnr_db = psnr(ref, test, quality_peak(cfg_, ref));
  run.ssim = ssim(ref, test);
  run.rel_l2 = relative_l2(ref, test);
  return run;
}

std::vector<SeedRun> PairedRunner::run_all(const Policy& policy) const {
  std::vector<SeedRun> runs;
  for (std::size_t i = 0; i < cfg_.seeds.size(); ++i) {
    runs.push_back(run_seed(policy, i));
  }
  return runs;
}

namespace {

Report make_report(const std::string& kind, const ExperimentConfig& cfg) {
  Report r;
  r.kind = kind;
  r.config_hash = config_hash(cfg);
  r.config_echo = config_echo(cfg);
  return r;
}

struct CellAggregate {
  double time_s = 0, baseline_s = 0, speedup = 0;
  double joint = 0, detail = 0, full = 0, hit_fraction = 0;
  double psnr_db = 0, ssim = 0, rel_l2 = 0;
  double metric_check_us = 0;
};

CellAggregate aggregate(const std::vector<SeedRun>& runs) {
  std::vector<double> t, b, sp, j, d, f, hf, p, s, l, mc;
  for (const SeedRun& r : runs) {
    t.push_back(r.cached_seconds);
    b.push_back(r.baseline_seconds);
    sp.push_back(r.speedup);
    j.push_back(static_cast<double>(r.cached.joint_hits));
    d.push_back(static_cast<double>(r.cached.detail_hits));
    f.push_back(static_cast<double>(r.cached.full_computes));
    hf.push_back(r.cached.hit_fraction());
    p.push_back(r.psnr_db);
    s.push_back(r.ssim);
    l.push_back(r.rel_l2);
    if (r.cached.metric_checks) {
      mc.push_back(1e6 * r.cached.metric_seconds /
                   static_cast<double>(r.cached.metric_checks));
    }
  }
  return {mean_of(t), mean_of(b),  mean_of(sp), mean_of(j),
          mean_of(d), mean_of(f),  mean_of(hf), mean_psnr(p),
          mean_of(s), mean_of(l),  mean_of(mc)};
}

}  // namespace

RunReport run_experiment(const ExperimentConfig& cfg) {
  const PairedRunner runner(cfg);
  const Policy policy = build_policy(cfg);
  const bool self = std::holds_alternative<NoCachePolicy>(policy);

  RunReport out;
  out.runs = runner.run_all(policy);
  out.report = make_report("run", cfg);
  Table& table = out.report.table;
  table.columns = {"config_hash", "seed",        "policy",        "tau1",
                   "tau2",        "dp1",         "dp2",           "T",
                   "time_total_s", "joint_hits", "detail_hits",
                   "full_computes", "psnr_db",   "ssim",          "rel_l2"};
  table.timing_columns = {"time_total_s"};
  const std::string hash = out.report.config_hash;
  auto add_row = [&](const SeedRun& r, const RunStats& stats,
                     const std::string& policy_label, double seconds,
                     double p, double s, double l) {
    table.rows.push_back({hash, as_int(r.seed), policy_label, cfg.tau1,
                          cfg.tau2, as_int(cfg.dp1), as_int(cfg.dp2),
                          as_int(cfg.steps), seconds,
                          as_int(stats.joint_hits), as_int(stats.detail_hits),
                          as_int(stats.full_computes), p, s, l});
  };
  for (const SeedRun& r : out.runs) {
    const Tensor4& ref = r.baseline.final_latent;
    add_row(r, r.baseline, "none", r.baseline_seconds,
            psnr(ref, ref, quality_peak(cfg, ref)), ssim(ref, ref),
            relative_l2(ref, ref));
    if (!self) {
      add_row(r, r.cached, policy_name(policy), r.cached_seconds, r.psnr_db,
              r.ssim, r.rel_l2);
    }
  }

  const CellAggregate agg = aggregate(out.runs);
  std::vector<double> sp, t, p, s, l;
  for (const SeedRun& r : out.runs) {
    sp.push_back(r.speedup);
    t.push_back(r.cached_seconds);
    p.push_back(r.psnr_db);
    s.push_back(r.ssim);
    l.push_back(r.rel_l2);
  }
  auto& sum = out.report.summary;
  sum["speedup_mean"] = agg.speedup;
  sum["speedup_std"] = stddev_of(sp);
  sum["time_total_s_mean"] = agg.time_s;
  sum["time_total_s_std"] = stddev_of(t);
  sum["baseline_time_s_mean"] = agg.baseline_s;
  sum["metric_check_us_mean"] = agg.metric_check_us;
  sum["psnr_db_mean"] = agg.psnr_db;
  sum["psnr_db_std"] = std::isinf(agg.psnr_db) ? 0.0 : stddev_of(p);
  sum["ssim_mean"] = agg.ssim;
  sum["ssim_std"] = stddev_of(s);
  sum["rel_l2_mean"] = agg.rel_l2;
  sum["rel_l2_std"] = stddev_of(l);
  sum["joint_hits_mean"] = agg.joint;
  sum["detail_hits_mean"] = agg.detail;
  sum["full_computes_mean"] = agg.full;
  sum["policy"] = std::string(policy_name(policy));
  out.report.timing_keys = {"speedup_mean",         "speedup_std",
                            "time_total_s_mean",    "time_total_s_std",
                            "baseline_time_s_mean", "metric_check_us_mean"};
  return out;
}

Report sweep_thresholds(const ExperimentConfig& cfg,
                        const std::vector<double>& tau1_grid,
                        const std::vector<double>& tau2_grid) {
  if (tau1_grid.empty() || tau2_grid.empty()) {
    throw Error(ErrorCode::kConfig, "threshold grids must be non-empty");
  }
  const PairedRunner runner(cfg);
  Report report = make_report("sweep_thresholds", cfg);
  Table& table = report.table;
  table.columns = {"tau1",          "tau2",        "time_total_s",
                   "baseline_time_s", "speedup",   "joint_hits",
                   "detail_hits",   "full_computes", "hit_fraction",
                   "psnr_db",       "ssim",        "rel_l2",
                   "best_psnr",     "best_ssim",   "best_rel_l2",
                   "best_speedup"};
  table.timing_columns = {"time_total_s", "baseline_time_s", "speedup",
                          "best_speedup"};

  std::vector<CellAggregate> cells;
  for (double tau1 : tau1_grid) {
    for (double tau2 : tau2_grid) {
      H2Config h2 = build_h2_config(cfg);
      h2.tau1 = tau1;
      h2.tau2 = tau2;
      const CellAggregate a = aggregate(runner.run_all(H2Policy{h2}));
      cells.push_back(a);
      table.rows.push_back({tau1, tau2, a.time_s, a.baseline_s, a.speedup,
                            a.joint, a.detail, a.full, a.hit_fraction,
                            a.psnr_db, a.ssim, a.rel_l2, std::int64_t{0},
                            std::int64_t{0}, std::int64_t{0},
                            std::int64_t{0}});
    }
  }

  // Markers consider only rows that actually cached something; the
  // zero-hit rows reproduce the baseline and would win trivially.
  std::vector<std::size_t> candidates;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (cells[i].hit_fraction > 0.0) candidates.push_back(i);
  }
  if (candidates.empty()) {
    for (std::size_t i = 0; i < cells.size(); ++i) candidates.push_back(i);
  }
  auto mark = [&](const std::string& column, auto key) {
    std::size_t best = candidates.front();
    for (std::size_t i : candidates) {
      if (key(cells[i]) > key(cells[best])) best = i;
    }
    table.rows[best][table.column(column)] = std::int64_t{1};
    report.summary[column + "_row"] = as_int(best);
  };
  mark("best_psnr", [](const CellAggregate& c) { return c.psnr_db; });
  mark("best_ssim", [](const CellAggregate& c) { return c.ssim; });
  mark("best_rel_l2", [](const CellAggregate& c) { return -c.rel_l2; });
  mark("best_speedup", [](const CellAggregate& c) { return c.speedup; });
  report.timing_keys = {"best_speedup_row"};
  return report;
}

Report sweep_steps(const ExperimentConfig& cfg,
                   const std::vector<std::size_t>& step_counts) {
  if (step_counts.empty()) {
    throw Error(ErrorCode::kConfig, "step list must be non-empty");
  }
  Report report = make_report("sweep_steps", cfg);
  Table& table = report.table;
  table.columns = {"T",           "time_total_s", "baseline_time_s",
                   "speedup",     "speedup_std",  "joint_hits",
                   "detail_hits", "full_computes", "psnr_db",
                   "ssim",        "rel_l2"};
  table.timing_columns = {"time_total_s", "baseline_time_s", "speedup",
                          "speedup_std"};
  for (std::size_t steps : step_counts) {
    if (steps == 0) throw Error(ErrorCode::kConfig, "step counts must be >= 1");
    ExperimentConfig c = cfg;
    c.steps = steps;
    const PairedRunner runner(c);
    const std::vector<SeedRun> runs = runner.run_all(build_policy(c));
    const CellAggregate a = aggregate(runs);
    std::vector<double> sp;
    for (const auto& r : runs) sp.push_back(r.speedup);
    table.rows.push_back({as_int(steps), a.time_s, a.baseline_s, a.speedup,
                          stddev_of(sp), a.joint, a.detail, a.full, a.psnr_db,
                          a.ssim, a.rel_l2});
  }
  return report;
}

Report ablate_pfs(const ExperimentConfig& cfg,
                  const std::vector<double>& tau2_grid) {
  if (tau2_grid.empty()) {
    throw Error(ErrorCode::kConfig, "tau2 grid must be non-empty");
  }
  const PairedRunner runner(cfg);
  Report report = make_report("ablate_pfs", cfg);
  Table& table = report.table;
  table.columns = {"variant",       "tau1",        "tau2",
                   "dp1",           "dp2",         "time_total_s",
                   "metric_check_us", "joint_hits", "detail_hits",
                   "full_computes", "psnr_db",     "ssim",
                   "rel_l2",        "time_delta_pct", "hit_delta"};
  table.timing_columns = {"time_total_s", "metric_check_us",
                          "time_delta_pct"};
  const std::size_t full_divisor = cfg.shape.height;
  for (double tau2 : tau2_grid) {
    H2Config with_pfs{cfg.tau1, tau2, PfsRelDiff{{cfg.dp1}},
                      PfsRelDiff{{cfg.dp2}}};
    H2Config without{cfg.tau1, tau2, PfsRelDiff{{full_divisor}},
                     PfsRelDiff{{full_divisor}}};
    const CellAggregate off = aggregate(runner.run_all(H2Policy{without}));
    const CellAggregate on = aggregate(runner.run_all(H2Policy{with_pfs}));
    const double off_hits = off.joint + off.detail;
    const double on_hits = on.joint + on.detail;
    table.rows.push_back({std::string("without_pfs"), cfg.tau1, tau2,
                          as_int(full_divisor), as_int(full_divisor),
                          off.time_s, off.metric_check_us, off.joint,
                          off.detail, off.full, off.psnr_db, off.ssim,
                          off.rel_l2, 0.0, 0.0});
    table.rows.push_back({std::string("with_pfs"), cfg.tau1, tau2,
                          as_int(cfg.dp1), as_int(cfg.dp2), on.time_s,
                          on.metric_check_us, on.joint, on.detail, on.full,
                          on.psnr_db, on.ssim, on.rel_l2,
                          100.0 * (on.time_s - off.time_s) / off.time_s,
                          on_hits - off_hits});
  }
  return report;
}

Report bench_metric(const ExperimentConfig& cfg, std::size_t trials) {
  validate(cfg);
  if (trials == 0) throw Error(ErrorCode::kConfig, "trials must be >= 1");
  const Tensor4 a = seeded_gaussian(cfg.shape, 1);
  const Tensor4 b = seeded_gaussian(cfg.shape, 2);
  Report report = make_report("bench_metric", cfg);
  Table& table = report.table;
  table.columns = {"metric", "divisor", "kernel", "value", "median_us"};
  table.timing_columns = {"median_us"};

  auto bench = [&](const SimilarityMetric& m, std::size_t divisor) {
    std::vector<double> samples;
    double value = 0.0;
    for (std::size_t i = 0; i < trials; ++i) {
      const auto start = Clock::now();
      value = metric_evaluate(m, a, b);
      samples.push_back(
          std::chrono::duration<double, std::micro>(Clock::now() - start)
              .count());
    }
    const std::size_t kernel =
        divisor ? kernel_size(cfg.shape.height, divisor) : 1;
    table.rows.push_back({metric_name(m), as_int(divisor), as_int(kernel),
                          value, median(samples)});
  };
  bench(FullL2{}, 0);
  bench(FullRelL2{}, 0);
  std::vector<std::size_t> divisors{cfg.dp1, cfg.dp2, cfg.shape.height};
  std::sort(divisors.begin(), divisors.end());
  divisors.erase(std::unique(divisors.begin(), divisors.end()),
                 divisors.end());
  for (std::size_t d : divisors) bench(PfsRelDiff{{d}}, d);
  return report;
}

Report replay_report(const Trace& trace, const ExperimentConfig& cfg) {
  const Policy policy = build_policy(cfg);
  const RunStats stats = replay_policy(trace, policy);
  Report report = make_report("replay", cfg);
  Table& table = report.table;
  table.columns = {"step", "outcome", "metric1", "metric2"};
  for (std::size_t i = 0; i < stats.steps(); ++i) {
    table.rows.push_back({as_int(i), std::string(outcome_name(
                                         stats.outcomes[i].kind)),
                          stats.metric1_values[i], stats.metric2_values[i]});
  }
  report.summary["policy"] = std::string(policy_name(policy));
  report.summary["steps"] = as_int(stats.steps());
  report.summary["joint_hits"] = as_int(stats.joint_hits);
  report.summary["detail_hits"] = as_int(stats.detail_hits);
  report.summary["full_computes"] = as_int(stats.full_computes);
  return report;
}

}  // namespace h2cache
