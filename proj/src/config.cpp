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

#include "h2cache/config.h"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "h2cache/error.h"
#include "h2cache/io_util.h"
#include "h2cache/pfs.h"

namespace h2cache {
namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, sep)) parts.push_back(trim(item));
  return parts;
}

std::uint64_t parse_u64(const std::string& text) {
  std::uint64_t v = 0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end || text.empty()) {
    throw Error(ErrorCode::kConfig, "expected an unsigned integer, got '" +
                                        text + "'");
  }
  return v;
}

bool parse_bool(const std::string& text) {
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  throw Error(ErrorCode::kConfig, "expected true/false, got '" + text + "'");
}

std::string join_u64(const std::vector<std::uint64_t>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(v[i]);
  }
  return out;
}

struct Field {
  std::function<void(ExperimentConfig&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

template <typename T>
Field size_field(T ExperimentConfig::*member) {
  return {[member](ExperimentConfig& c, const std::string& v) {
            c.*member = static_cast<T>(parse_u64(v));
          },
          [member](const ExperimentConfig& c) {
            return std::to_string(c.*member);
          }};
}

Field double_field(double ExperimentConfig::*member) {
  return {[member](ExperimentConfig& c, const std::string& v) {
            c.*member = parse_double(v);
          },
          [member](const ExperimentConfig& c) {
            return format_double(c.*member);
          }};
}

Field string_field(std::string ExperimentConfig::*member) {
  return {[member](ExperimentConfig& c, const std::string& v) {
            c.*member = v;
          },
          [member](const ExperimentConfig& c) { return c.*member; }};
}

Field shape_field(std::size_t Shape::*member) {
  return {[member](ExperimentConfig& c, const std::string& v) {
            c.shape.*member = static_cast<std::size_t>(parse_u64(v));
          },
          [member](const ExperimentConfig& c) {
            return std::to_string(c.shape.*member);
          }};
}

Field cost_field(std::uint64_t CostModel::*member) {
  return {[member](ExperimentConfig& c, const std::string& v) {
            c.cost.*member = parse_u64(v);
          },
          [member](const ExperimentConfig& c) {
            return std::to_string(c.cost.*member);
          }};
}

// Ordered: the echo lists keys in this order.
const std::vector<std::pair<std::string, Field>>& fields() {
  static const std::vector<std::pair<std::string, Field>> table = {
      {"batch", shape_field(&Shape::batch)},
      {"channels", shape_field(&Shape::channels)},
      {"height", shape_field(&Shape::height)},
      {"width", shape_field(&Shape::width)},
      {"steps", size_field(&ExperimentConfig::steps)},
      {"schedule_steps", size_field(&ExperimentConfig::schedule_steps)},
      {"beta_start", double_field(&ExperimentConfig::beta_start)},
      {"beta_end", double_field(&ExperimentConfig::beta_end)},
      {"backend", string_field(&ExperimentConfig::backend)},
      {"backend_seed", size_field(&ExperimentConfig::backend_seed)},
      {"analytic_mu", double_field(&ExperimentConfig::analytic_mu)},
      {"analytic_sigma", double_field(&ExperimentConfig::analytic_sigma)},
      {"smooth_gain", double_field(&ExperimentConfig::smooth_gain)},
      {"cond_dim", size_field(&ExperimentConfig::cond_dim)},
      {"cond_seed", size_field(&ExperimentConfig::cond_seed)},
      {"l1_work", cost_field(&CostModel::l1_work)},
      {"l2_work", cost_field(&CostModel::l2_work)},
      {"policy", string_field(&ExperimentConfig::policy)},
      {"tau1", double_field(&ExperimentConfig::tau1)},
      {"tau2", double_field(&ExperimentConfig::tau2)},
      {"metric1", string_field(&ExperimentConfig::metric1)},
      {"metric2", string_field(&ExperimentConfig::metric2)},
      {"dp1", size_field(&ExperimentConfig::dp1)},
      {"dp2", size_field(&ExperimentConfig::dp2)},
      {"seeds",
       {[](ExperimentConfig& c, const std::string& v) {
          c.seeds.clear();
          for (const auto& item : split(v, ',')) {
            c.seeds.push_back(parse_u64(item));
          }
        },
        [](const ExperimentConfig& c) { return join_u64(c.seeds); }}},
      {"timing_repeats", size_field(&ExperimentConfig::timing_repeats)},
      {"warmup",
       {[](ExperimentConfig& c, const std::string& v) {
          c.warmup = parse_bool(v);
        },
        [](const ExperimentConfig& c) {
          return std::string(c.warmup ? "true" : "false");
        }}},
      {"psnr_peak",
       {[](ExperimentConfig& c, const std::string& v) {
          c.psnr_peak = v == "auto" ? 0.0 : parse_double(v);
        },
        [](const ExperimentConfig& c) {
          return c.psnr_peak == 0.0 ? std::string("auto")
                                    : format_double(c.psnr_peak);
        }}},
      {"output_csv", string_field(&ExperimentConfig::output_csv)},
      {"output_json", string_field(&ExperimentConfig::output_json)},
  };
  return table;
}

const Field* find_field(const std::string& key) {
  for (const auto& [name, field] : fields()) {
    if (name == key) return &field;
  }
  return nullptr;
}

void assign(ExperimentConfig& cfg, const std::string& key,
            const std::string& value, const std::string& where) {
  const Field* field = find_field(key);
  if (!field) {
    throw Error(ErrorCode::kConfig, where + "unknown key '" + key + "'");
  }
  try {
    field->set(cfg, value);
  } catch (const Error& e) {
    throw Error(ErrorCode::kConfig,
                where + "key '" + key + "': " + e.what());
  }
}

}  // namespace

bool ExperimentConfig::operator==(const ExperimentConfig& other) const {
  return config_echo(*this) == config_echo(other);
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& [name, field] : fields()) k.push_back(name);
    return k;
  }();
  return keys;
}

std::string format_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

double parse_double(const std::string& text) {
  const std::string t = trim(text);
  if (t == "inf" || t == "+inf") return std::numeric_limits<double>::infinity();
  if (t == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0.0;
  const auto* end = t.data() + t.size();
  const auto [ptr, ec] = std::from_chars(t.data(), end, v);
  if (ec != std::errc() || ptr != end || t.empty() || std::isnan(v)) {
    throw Error(ErrorCode::kConfig, "expected a number, got '" + t + "'");
  }
  return v;
}

std::vector<double> parse_double_list(const std::string& text) {
  std::vector<double> out;
  for (const auto& item : split(text, ',')) out.push_back(parse_double(item));
  if (out.empty()) throw Error(ErrorCode::kConfig, "empty list");
  return out;
}

std::vector<std::size_t> parse_size_list(const std::string& text) {
  std::vector<std::size_t> out;
  for (const auto& item : split(text, ',')) {
    out.push_back(static_cast<std::size_t>(parse_u64(item)));
  }
  if (out.empty()) throw Error(ErrorCode::kConfig, "empty list");
  return out;
}

ExperimentConfig parse_config_text(const std::string& text) {
  ExperimentConfig cfg;
  std::set<std::string> seen;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = "line " + std::to_string(line_no) + ": ";
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::kConfig, where + "expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (!seen.insert(key).second && find_field(key)) {
      throw Error(ErrorCode::kConfig, where + "duplicate key '" + key + "'");
    }
    assign(cfg, key, value, where);
  }
  validate(cfg);
  return cfg;
}

ExperimentConfig parse_config(const std::filesystem::path& path) {
  return parse_config_text(read_file(path));
}

void apply_override(ExperimentConfig& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) {
    throw Error(ErrorCode::kConfig,
                "override '" + assignment + "' is not key=value");
  }
  assign(cfg, trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)),
         "override: ");
}

void validate(const ExperimentConfig& cfg) {
  auto fail = [](const std::string& msg) {
    throw Error(ErrorCode::kConfig, msg);
  };
  const Shape& s = cfg.shape;
  if (s.batch == 0 || s.channels == 0 || s.height == 0 || s.width == 0) {
    fail("batch, channels, height and width must be >= 1");
  }
  if (cfg.schedule_steps == 0) fail("schedule_steps must be >= 1");
  if (cfg.steps == 0 || cfg.steps > cfg.schedule_steps) {
    fail("steps must be in 1..schedule_steps");
  }
  if (!(cfg.beta_start > 0.0 && cfg.beta_start <= cfg.beta_end &&
        cfg.beta_end < 1.0)) {
    fail("need 0 < beta_start <= beta_end < 1");
  }
  if (cfg.backend != "smooth" && cfg.backend != "analytic") {
    fail("backend must be 'smooth' or 'analytic'");
  }
  if (!(cfg.analytic_sigma > 0.0) || !std::isfinite(cfg.analytic_mu)) {
    fail("analytic_sigma must be > 0 and analytic_mu finite");
  }
  if (!(cfg.smooth_gain >= 0.0) || !std::isfinite(cfg.smooth_gain)) {
    fail("smooth_gain must be >= 0");
  }
  if (cfg.policy != "none" && cfg.policy != "block" && cfg.policy != "h2") {
    fail("policy must be 'none', 'block' or 'h2'");
  }
  if (!(cfg.tau1 >= 0.0) || !(cfg.tau2 >= 0.0)) {
    fail("tau1 and tau2 must be >= 0");
  }
  for (const auto* m : {&cfg.metric1, &cfg.metric2}) {
    if (*m != "pfs" && *m != "full_l2" && *m != "full_rel_l2") {
      fail("metric must be 'pfs', 'full_l2' or 'full_rel_l2'");
    }
  }
  if (cfg.dp1 == 0 || cfg.dp2 == 0) fail("dp1 and dp2 must be >= 1");
  if (cfg.seeds.empty()) fail("seeds must list at least one seed");
  if (cfg.timing_repeats == 0) fail("timing_repeats must be >= 1");
  if (cfg.psnr_peak < 0.0) fail("psnr_peak must be > 0 or auto");
}

std::string config_echo(const ExperimentConfig& cfg) {
  std::string out;
  for (const auto& [name, field] : fields()) {
    out += name + " = " + field.get(cfg) + "\n";
  }
  return out;
}

std::string config_hash(const ExperimentConfig& cfg) {
  ExperimentConfig stripped = cfg;
  stripped.output_csv.clear();
  stripped.output_json.clear();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : config_echo(stripped)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

NoiseSchedule build_schedule(const ExperimentConfig& cfg) {
  return build_linear_schedule(cfg.schedule_steps, cfg.beta_start,
                               cfg.beta_end);
}

BackendPtr build_backend(const ExperimentConfig& cfg,
                         const NoiseSchedule& sched) {
  BackendPtr inner;
  if (cfg.backend == "analytic") {
    inner = std::make_shared<AnalyticGaussianBackend>(
        Tensor4::filled(cfg.shape, static_cast<float>(cfg.analytic_mu)),
        cfg.analytic_sigma, sched);
  } else {
    inner = std::make_shared<SmoothRandomBackend>(
        cfg.shape, cfg.backend_seed, sched, cfg.cond_dim, cfg.smooth_gain);
  }
  return wrap_with_cost(std::move(inner), cfg.cost);
}

H2Config build_h2_config(const ExperimentConfig& cfg) {
  return H2Config{cfg.tau1, cfg.tau2, make_metric(cfg.metric1, cfg.dp1),
                  make_metric(cfg.metric2, cfg.dp2)};
}

Policy build_policy(const ExperimentConfig& cfg) {
  if (cfg.policy == "none") return NoCachePolicy{};
  if (cfg.policy == "block") {
    return BlockCachePolicy{cfg.tau1, make_metric(cfg.metric1, cfg.dp1)};
  }
  return H2Policy{build_h2_config(cfg)};
}

}  // namespace h2cache
