// faultmap/io.hpp
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <array>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <optional>
#include <sstream>

#include "faultmap/core.hpp"
#include "faultmap/spectral.hpp"

namespace faultmap {

/// A parsed CSV: header row plus string cells. Comma-separated, UTF-8,
/// '.' decimal point, no quoting.
struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  std::optional<std::size_t> column_index(const std::string& name) const {
    for (std::size_t i = 0; i < columns.size(); ++i)
      if (columns[i] == name) return i;
    return std::nullopt;
  }

  std::size_t require_column(const std::string& name) const {
    const auto idx = column_index(name);
    if (!idx) throw io_error("column '" + name + "' not found in CSV header");
    return *idx;
  }
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  for (char ch : line) {
    if (ch == ',') {
      cells.push_back(std::move(cell));
      cell.clear();
    } else if (ch != '\r') {
      cell.push_back(ch);
    }
  }
  cells.push_back(std::move(cell));
  return cells;
}

inline double parse_double(const std::string& text, const std::string& where) {
  double value = 0.0;
  const char* begin = text.data();
  const char* end = begin + text.size();
  const auto res = std::from_chars(begin, end, value);
  if (res.ec != std::errc() || res.ptr != end)
    throw io_error(where + ": cannot parse '" + text + "' as a number");
  return value;
}

inline bool parses_as_double(const std::string& text) {
  if (text.empty()) return false;
  double value = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  return res.ec == std::errc() && res.ptr == text.data() + text.size();
}

}  // namespace detail

inline CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open '" + path + "'");
  CsvTable table;
  std::string line;
  if (!std::getline(in, line)) throw io_error("'" + path + "': empty file (header required)");
  table.columns = detail::split_csv_line(line);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto cells = detail::split_csv_line(line);
    if (cells.size() != table.columns.size())
      throw io_error("'" + path + "' line " + std::to_string(line_no) + ": expected " +
                     std::to_string(table.columns.size()) + " fields, got " +
                     std::to_string(cells.size()));
    table.rows.push_back(std::move(cells));
  }
  if (table.rows.empty()) throw io_error("'" + path + "': no data rows");
  return table;
}

/// Numeric view of the named columns.
inline FeatureMatrix table_to_features(const CsvTable& table,
                                       const std::vector<std::string>& names) {
  if (names.empty()) throw invalid_argument("table_to_features: no columns requested");
  std::vector<std::size_t> idx;
  idx.reserve(names.size());
  for (const auto& name : names) idx.push_back(table.require_column(name));
  Matrix m(table.rows.size(), names.size());
  for (std::size_t r = 0; r < table.rows.size(); ++r)
    for (std::size_t c = 0; c < idx.size(); ++c)
      m(r, c) = detail::parse_double(table.rows[r][idx[c]],
                                     "row " + std::to_string(r + 2) + " column '" + names[c] + "'");
  return FeatureMatrix(std::move(m), names);
}

/// Single numeric column CSV (header required) as a vibration trace.
inline SignalTrace read_signal_csv(const std::string& path, double sample_rate_hz) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw io_error("'" + path + "': empty file (header required)");
  if (detail::split_csv_line(line).size() != 1)
    throw io_error("'" + path + "': expected a single-column CSV");
  std::vector<double> samples;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    samples.push_back(
        detail::parse_double(detail::split_csv_line(line)[0], "line " + std::to_string(line_no)));
  }
  if (samples.empty()) throw io_error("'" + path + "': no samples");
  return SignalTrace(std::move(samples), sample_rate_hz);
}

/// Raw little-endian 32-bit float stream as a vibration trace.
inline SignalTrace read_signal_f32(const std::string& path, double sample_rate_hz) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open '" + path + "'");
  in.seekg(0, std::ios::end);
  const auto bytes = static_cast<std::size_t>(in.tellg());
  in.seekg(0, std::ios::beg);
  if (bytes == 0 || bytes % 4 != 0)
    throw io_error("'" + path + "': size " + std::to_string(bytes) +
                   " is not a multiple of 4 bytes (expected float32 stream)");
  std::vector<float> raw(bytes / 4);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(bytes));
  if (!in) throw io_error("'" + path + "': short read");
  std::vector<double> samples(raw.begin(), raw.end());
  return SignalTrace(std::move(samples), sample_rate_hz);
}

// --------------------------------------------------------------------------
// Turbofan degradation records: whitespace-separated text, 26 columns per
// line (engine id, cycle, 3 operating settings, 21 sensors).

struct TurbofanRecord {
  int engine_id = 0;
  int cycle = 0;
  std::array<double, 3> op_settings{};
  std::array<double, 21> sensors{};
};

struct TurbofanData {
  std::vector<TurbofanRecord> records;       // grouped by engine, cycles ascending
  std::vector<std::string> warnings;

  std::size_t engine_count() const {
    std::size_t count = 0;
    int last = std::numeric_limits<int>::min();
    for (const auto& r : records)
      if (r.engine_id != last) {
        ++count;
        last = r.engine_id;
      }
    return count;
  }

  /// Cycle count at end of life per engine, in engine order.
  std::vector<std::pair<int, int>> engine_lifespans() const {
    std::vector<std::pair<int, int>> spans;
    for (const auto& r : records) {
      if (spans.empty() || spans.back().first != r.engine_id)
        spans.emplace_back(r.engine_id, r.cycle);
      else
        spans.back().second = std::max(spans.back().second, r.cycle);
    }
    return spans;
  }
};

inline TurbofanData ingest_turbofan(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open '" + path + "'");
  TurbofanData data;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    std::istringstream fields(line);
    std::vector<double> values;
    double v;
    while (fields >> v) values.push_back(v);
    fields.clear();
    std::string trailing;
    if (fields >> trailing)
      throw io_error("'" + path + "' line " + std::to_string(line_no) +
                     ": non-numeric field '" + trailing + "'");
    if (values.size() != 26)
      throw io_error("'" + path + "' line " + std::to_string(line_no) + ": expected 26 columns, got " +
                     std::to_string(values.size()));
    TurbofanRecord record;
    record.engine_id = static_cast<int>(values[0]);
    record.cycle = static_cast<int>(values[1]);
    for (std::size_t i = 0; i < 3; ++i) record.op_settings[i] = values[2 + i];
    for (std::size_t i = 0; i < 21; ++i) record.sensors[i] = values[5 + i];
    if (record.cycle < 1)
      throw io_error("'" + path + "' line " + std::to_string(line_no) + ": cycle must be >= 1");
    data.records.push_back(record);
  }
  if (data.records.empty()) throw io_error("'" + path + "': no records");

  std::stable_sort(data.records.begin(), data.records.end(),
                   [](const TurbofanRecord& a, const TurbofanRecord& b) {
                     return a.engine_id != b.engine_id ? a.engine_id < b.engine_id
                                                       : a.cycle < b.cycle;
                   });
  int last_engine = std::numeric_limits<int>::min();
  int expected_cycle = 1;
  for (const auto& r : data.records) {
    if (r.engine_id != last_engine) {
      last_engine = r.engine_id;
      expected_cycle = 1;
    }
    if (r.cycle != expected_cycle) {
      data.warnings.push_back("engine " + std::to_string(r.engine_id) +
                              ": cycles not contiguous at cycle " + std::to_string(r.cycle) +
                              " (expected " + std::to_string(expected_cycle) + ")");
      expected_cycle = r.cycle + 1;
    } else {
      ++expected_cycle;
    }
  }
  return data;
}

/// Operating-condition label: the three settings rounded to 2 decimals,
/// joined into a deterministic key. Records from the same flight condition
/// collapse to the same label. Values rounding to zero are normalized so
/// "-0.00" and "0.00" do not become distinct conditions.
inline std::string condition_label(const std::array<double, 3>& op_settings) {
  std::array<double, 3> rounded{};
  for (std::size_t i = 0; i < 3; ++i)
    rounded[i] = std::round(op_settings[i] * 100.0) / 100.0 + 0.0;
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.2f_%.2f_%.2f", rounded[0], rounded[1], rounded[2]);
  return std::string(buf);
}

}  // namespace faultmap
