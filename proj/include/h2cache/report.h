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
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <variant>
#include <vector>

namespace h2cache {

inline constexpr int kReportSchemaVersion = 1;

using Value = std::variant<std::string, double, std::int64_t>;

std::string format_value(const Value& v);

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Value>> rows;
  // Columns holding wall-clock measurements; everything else is
  // deterministic for a fixed config.
  std::set<std::string> timing_columns;

  std::size_t column(const std::string& name) const;
  const Value& at(std::size_t row, const std::string& name) const;
  double number(std::size_t row, const std::string& name) const;
};

struct Report {
  std::string kind;  // "run", "sweep_thresholds", ...
  std::string config_hash;
  std::string config_echo;
  Table table;
  std::map<std::string, Value> summary;
  // Summary entries holding wall-clock measurements.
  std::set<std::string> timing_keys;
};

enum class ReportFormat { kCsv, kJson };

// CSV: header line then one line per row, values in column order.
std::string render_csv(const Table& table, bool include_timing = true);
// JSON: {"schema_version", "kind", "config_hash", "config", "columns",
// "rows", "summary"}. Non-finite numbers are written as strings.
std::string render_json(const Report& report, bool include_timing = true);

// Write-then-rename; throws ErrorCode::kIo.
void emit_report(const Report& report, ReportFormat format,
                 const std::filesystem::path& path);

}  // namespace h2cache
