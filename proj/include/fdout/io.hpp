#pragma once

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "fdout/core.hpp"

namespace fdout::io {

// ---------------------------------------------------------------------------
// Files
// ---------------------------------------------------------------------------

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Writes `content` to a sibling temporary file, then renames it over `path`.
inline void write_file_atomic(const std::string& path, const std::string& content) {
  const std::filesystem::path target(path);
  std::filesystem::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot open '" + tmp.string() + "' for writing");
    out << content;
    out.flush();
    if (!out) throw Error(ErrorCode::IoError, "write to '" + tmp.string() + "' failed");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, target, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw Error(ErrorCode::IoError, "cannot move output into place at '" + path + "'");
  }
}

/// %.17g, which round-trips every finite double.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

enum class HeaderMode { Auto, Present, Absent };

struct CsvOptions {
  /// Auto treats the first row as grid points when its numeric cells are
  /// strictly increasing.
  HeaderMode header = HeaderMode::Auto;
};

namespace detail {

inline std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

inline bool parse_number(const std::string& cell, double& out) {
  if (cell.empty()) return false;
  const char* begin = cell.c_str();
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(begin, &end);
  if (end != begin + cell.size()) return false;
  out = v;
  return true;
}

struct RawTable {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_numbers;  // 1-based source line per row
};

inline RawTable split_csv(const std::string& text) {
  RawTable t;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    if (trim(line).empty()) continue;
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(trim(cell));
    if (line.back() == ',') cells.emplace_back();
    t.rows.push_back(std::move(cells));
    t.line_numbers.push_back(line_no);
  }
  return t;
}

[[noreturn]] inline void parse_error(const std::string& path, std::size_t line, std::size_t col,
                                     const std::string& what) {
  throw Error(ErrorCode::ParseError,
              path + ": line " + std::to_string(line) + ", column " + std::to_string(col) + ": " + what);
}

}  // namespace detail

/// Wide CSV: rows are curves, optional header row of grid points, optional
/// leading id column (detected from a non-numeric first cell on the last row).
inline CurveSample parse_wide_csv(const std::string& text, const std::string& source = "<csv>",
                                  CsvOptions opts = {}) {
  const detail::RawTable t = detail::split_csv(text);
  if (t.rows.empty()) throw Error(ErrorCode::EmptyInput, source + ": no rows");
  double tmp = 0.0;
  const bool id_col = !detail::parse_number(t.rows.back().front(), tmp);
  const std::size_t first = id_col ? 1 : 0;
  const std::size_t width = t.rows.front().size();

  std::vector<std::vector<double>> numeric(t.rows.size());
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& cells = t.rows[r];
    if (cells.size() != width) {
      throw Error(ErrorCode::RaggedRows, source + ": line " + std::to_string(t.line_numbers[r]) + " has " +
                                             std::to_string(cells.size()) + " fields, expected " +
                                             std::to_string(width));
    }
    for (std::size_t c = first; c < cells.size(); ++c) {
      double v = 0.0;
      if (!detail::parse_number(cells[c], v)) {
        detail::parse_error(source, t.line_numbers[r], c + 1, "'" + cells[c] + "' is not a number");
      }
      numeric[r].push_back(v);
    }
  }
  if (width <= first) detail::parse_error(source, t.line_numbers.front(), 1, "no value columns");

  bool header = opts.header == HeaderMode::Present;
  if (opts.header == HeaderMode::Auto && t.rows.size() >= 2) {
    const auto& h = numeric.front();
    header = std::is_sorted(h.begin(), h.end(), std::less_equal<>()) &&
             std::adjacent_find(h.begin(), h.end()) == h.end() && h.size() >= 2;
  }
  if (header && t.rows.size() < 2) throw Error(ErrorCode::EmptyInput, source + ": header without data rows");

  const std::size_t data_start = header ? 1 : 0;
  const std::size_t n = t.rows.size() - data_start;
  const std::size_t p = width - first;
  Matrix values(n, p);
  std::vector<std::string> ids;
  for (std::size_t r = 0; r < n; ++r) {
    const auto& row = numeric[r + data_start];
    for (std::size_t k = 0; k < p; ++k) {
      if (!std::isfinite(row[k])) {
        throw Error(ErrorCode::NonFiniteValue, source + ": line " + std::to_string(t.line_numbers[r + data_start]) +
                                                   ", column " + std::to_string(k + first + 1) +
                                                   ": non-finite value");
      }
      values(r, k) = row[k];
    }
    if (id_col) ids.push_back(t.rows[r + data_start].front());
  }
  Grid grid = header ? Grid(numeric.front()) : uniform_grid(p);
  return CurveSample(std::move(values), std::move(grid), std::move(ids));
}

inline CurveSample read_wide_csv(const std::string& path, CsvOptions opts = {}) {
  return parse_wide_csv(read_file(path), path, opts);
}

/// One file gives a univariate sample; several files of identical shape give
/// one coordinate each.
inline MultiCurveSample read_curves(const std::vector<std::string>& paths, CsvOptions opts = {}) {
  if (paths.empty()) throw Error(ErrorCode::EmptyInput, "no input files");
  std::vector<CurveSample> parts;
  for (const auto& p : paths) parts.push_back(read_wide_csv(p, opts));
  const CurveSample& ref = parts.front();
  std::vector<Matrix> dims;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const CurveSample& s = parts[k];
    if (s.n() != ref.n() || s.p() != ref.p()) {
      throw Error(ErrorCode::ShapeMismatch, paths[k] + " is " + std::to_string(s.n()) + "x" + std::to_string(s.p()) +
                                                " but " + paths[0] + " is " + std::to_string(ref.n()) + "x" +
                                                std::to_string(ref.p()));
    }
    if (!(s.grid == ref.grid)) throw Error(ErrorCode::ShapeMismatch, paths[k] + " has a different grid");
    if (!s.ids.empty() && !ref.ids.empty() && s.ids != ref.ids) {
      throw Error(ErrorCode::ShapeMismatch, paths[k] + " has different curve ids");
    }
    dims.push_back(s.values);
  }
  return MultiCurveSample(std::move(dims), ref.grid, ref.ids);
}

/// Header row of grid points, then one row per curve; ids (if any) first.
inline std::string format_wide_csv(const CurveSample& s) {
  std::string out;
  const bool ids = !s.ids.empty();
  if (ids) out += "id,";
  for (std::size_t t = 0; t < s.p(); ++t) {
    if (t) out += ',';
    out += format_double(s.grid[t]);
  }
  out += '\n';
  for (std::size_t i = 0; i < s.n(); ++i) {
    if (ids) out += s.ids[i] + ",";
    for (std::size_t t = 0; t < s.p(); ++t) {
      if (t) out += ',';
      out += format_double(s.values(i, t));
    }
    out += '\n';
  }
  return out;
}

inline void write_wide_csv(const std::string& path, const CurveSample& s) {
  write_file_atomic(path, format_wide_csv(s));
}

// ---------------------------------------------------------------------------
// Detection report
// ---------------------------------------------------------------------------

inline constexpr int kReportSchemaVersion = 1;

/// Outcome of one detector run. Index sets are 0-based in memory and 1-based
/// in the serialized form.
struct DetectionReport {
  int schema_version = kReportSchemaVersion;
  std::string method;
  nlohmann::ordered_json parameters = nlohmann::ordered_json::object();
  std::size_t n = 0, p = 0, d = 0;
  std::vector<std::pair<std::string, IndexSet>> outliers;
  std::vector<std::pair<std::string, std::vector<double>>> diagnostics;
  std::vector<std::pair<std::string, double>> statistics;
  std::vector<std::string> warnings;
  std::string error;  // error name when the run failed

  const IndexSet* find_outliers(const std::string& cls) const {
    for (const auto& [k, v] : outliers)
      if (k == cls) return &v;
    return nullptr;
  }
  const std::vector<double>* find_diagnostic(const std::string& key) const {
    for (const auto& [k, v] : diagnostics)
      if (k == key) return &v;
    return nullptr;
  }
};

inline nlohmann::ordered_json encode_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

inline double decode_number(const nlohmann::ordered_json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    throw Error(ErrorCode::ParseError, "unexpected string '" + s + "' where a number was expected");
  }
  return j.get<double>();
}

inline nlohmann::ordered_json to_json(const DetectionReport& r) {
  nlohmann::ordered_json j;
  j["schema_version"] = r.schema_version;
  j["method"] = r.method;
  j["parameters"] = r.parameters;
  j["n"] = r.n;
  j["p"] = r.p;
  j["d"] = r.d;
  j["index_base"] = 1;
  auto& out = j["outliers"] = nlohmann::ordered_json::object();
  for (const auto& [cls, set] : r.outliers) {
    auto arr = nlohmann::ordered_json::array();
    for (auto i : set) arr.push_back(i + 1);
    out[cls] = std::move(arr);
  }
  auto& diag = j["diagnostics"] = nlohmann::ordered_json::object();
  for (const auto& [key, values] : r.diagnostics) {
    auto arr = nlohmann::ordered_json::array();
    for (double v : values) arr.push_back(encode_number(v));
    diag[key] = std::move(arr);
  }
  auto& stats = j["statistics"] = nlohmann::ordered_json::object();
  for (const auto& [key, v] : r.statistics) stats[key] = encode_number(v);
  j["warnings"] = r.warnings;
  if (!r.error.empty()) j["error"] = r.error;
  return j;
}

inline DetectionReport report_from_json(const nlohmann::ordered_json& j) {
  DetectionReport r;
  try {
    r.schema_version = j.at("schema_version").get<int>();
    r.method = j.at("method").get<std::string>();
    r.parameters = j.at("parameters");
    r.n = j.at("n").get<std::size_t>();
    r.p = j.at("p").get<std::size_t>();
    r.d = j.at("d").get<std::size_t>();
    for (const auto& [cls, arr] : j.at("outliers").items()) {
      IndexSet set;
      for (const auto& v : arr) {
        const auto idx = v.get<std::size_t>();
        if (idx == 0) throw Error(ErrorCode::ParseError, "report indices are 1-based");
        set.push_back(idx - 1);
      }
      r.outliers.emplace_back(cls, std::move(set));
    }
    for (const auto& [key, arr] : j.at("diagnostics").items()) {
      std::vector<double> values;
      for (const auto& v : arr) values.push_back(decode_number(v));
      r.diagnostics.emplace_back(key, std::move(values));
    }
    if (j.contains("statistics")) {
      for (const auto& [key, v] : j.at("statistics").items()) r.statistics.emplace_back(key, decode_number(v));
    }
    r.warnings = j.at("warnings").get<std::vector<std::string>>();
    if (j.contains("error")) r.error = j.at("error").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("malformed report: ") + e.what());
  }
  return r;
}

inline std::string format_report(const DetectionReport& r) { return to_json(r).dump(2) + "\n"; }

inline DetectionReport parse_report(const std::string& text) {
  nlohmann::ordered_json j;
  try {
    j = nlohmann::ordered_json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("report is not valid JSON: ") + e.what());
  }
  return report_from_json(j);
}

inline void write_report(const std::string& path, const DetectionReport& r) {
  write_file_atomic(path, format_report(r));
}

inline DetectionReport read_report(const std::string& path) { return parse_report(read_file(path)); }

}  // namespace fdout::io
