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

#include "h2cache/report.h"

#include <cmath>
#include <fstream>
#include <iterator>
#include <sstream>

#include "h2cache/config.h"
#include "h2cache/error.h"
#include "h2cache/io_util.h"
#include "json.hpp"

namespace h2cache {

void write_file_atomic(const std::filesystem::path& path,
                       const std::string& contents) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw Error(ErrorCode::kIo, "cannot open " + tmp.string());
    }
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) {
      std::error_code ignored;
      std::filesystem::remove(tmp, ignored);
      throw Error(ErrorCode::kIo, "write failed for " + tmp.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw Error(ErrorCode::kIo, "cannot rename into " + path.string());
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::string data((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  if (in.bad()) throw Error(ErrorCode::kIo, "read failed for " + path.string());
  return data;
}

std::string format_value(const Value& v) {
  return std::visit(
      [](const auto& x) -> std::string {
        using X = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<X, std::string>) {
          return x;
        } else if constexpr (std::is_same_v<X, double>) {
          return format_double(x);
        } else {
          return std::to_string(x);
        }
      },
      v);
}

std::size_t Table::column(const std::string& name) const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i] == name) return i;
  }
  throw Error(ErrorCode::kInvalidArgument, "no column '" + name + "'");
}

const Value& Table::at(std::size_t row, const std::string& name) const {
  return rows.at(row).at(column(name));
}

double Table::number(std::size_t row, const std::string& name) const {
  const Value& v = at(row, name);
  if (const auto* d = std::get_if<double>(&v)) return *d;
  if (const auto* i = std::get_if<std::int64_t>(&v)) {
    return static_cast<double>(*i);
  }
  throw Error(ErrorCode::kInvalidArgument,
              "column '" + name + "' is not numeric");
}

namespace {

std::vector<std::size_t> kept_columns(const Table& table,
                                      bool include_timing) {
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < table.columns.size(); ++i) {
    if (include_timing || !table.timing_columns.count(table.columns[i])) {
      keep.push_back(i);
    }
  }
  return keep;
}

nlohmann::ordered_json to_json(const Value& v) {
  if (const auto* d = std::get_if<double>(&v)) {
    if (!std::isfinite(*d)) return format_double(*d);
    return *d;
  }
  if (const auto* i = std::get_if<std::int64_t>(&v)) return *i;
  return std::get<std::string>(v);
}

}  // namespace

std::string render_csv(const Table& table, bool include_timing) {
  const auto keep = kept_columns(table, include_timing);
  std::string out;
  for (std::size_t k = 0; k < keep.size(); ++k) {
    if (k) out += ",";
    out += table.columns[keep[k]];
  }
  out += "\n";
  for (const auto& row : table.rows) {
    for (std::size_t k = 0; k < keep.size(); ++k) {
      if (k) out += ",";
      out += format_value(row[keep[k]]);
    }
    out += "\n";
  }
  return out;
}

std::string render_json(const Report& report, bool include_timing) {
  const auto keep = kept_columns(report.table, include_timing);
  nlohmann::ordered_json j;
  j["schema_version"] = kReportSchemaVersion;
  j["kind"] = report.kind;
  j["config_hash"] = report.config_hash;

  nlohmann::ordered_json config = nlohmann::ordered_json::object();
  std::istringstream lines(report.config_echo);
  std::string line;
  while (std::getline(lines, line)) {
    const auto eq = line.find(" = ");
    if (eq != std::string::npos) {
      config[line.substr(0, eq)] = line.substr(eq + 3);
    }
  }
  j["config"] = config;

  nlohmann::ordered_json columns = nlohmann::ordered_json::array();
  for (std::size_t k : keep) columns.push_back(report.table.columns[k]);
  j["columns"] = columns;

  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const auto& row : report.table.rows) {
    nlohmann::ordered_json r = nlohmann::ordered_json::object();
    for (std::size_t k : keep) r[report.table.columns[k]] = to_json(row[k]);
    rows.push_back(r);
  }
  j["rows"] = rows;

  nlohmann::ordered_json summary = nlohmann::ordered_json::object();
  for (const auto& [key, value] : report.summary) {
    if (include_timing || !report.timing_keys.count(key)) {
      summary[key] = to_json(value);
    }
  }
  j["summary"] = summary;
  return j.dump(2) + "\n";
}

void emit_report(const Report& report, ReportFormat format,
                 const std::filesystem::path& path) {
  write_file_atomic(path, format == ReportFormat::kCsv
                              ? render_csv(report.table)
                              : render_json(report));
}

}  // namespace h2cache
