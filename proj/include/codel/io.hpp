#pragma once

#include <charconv>
#include <cstddef>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "codel/error.hpp"
#include "codel/hrv.hpp"
#include "codel/mlp.hpp"

namespace codel::io {

/// Shortest representation that round-trips.
inline std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc{}) throw FormatError("cannot format number");
  return std::string(buf, end);
}

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline double parse_double(std::string_view text, std::string_view what) {
  const std::string t = trim(text);
  double v = 0.0;
  const char* first = t.data();
  if (!t.empty() && t.front() == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, t.data() + t.size(), v);
  if (t.empty() || ec != std::errc{} || ptr != t.data() + t.size())
    throw FormatError("malformed number '" + t + "' in " + std::string(what));
  return v;
}

inline std::vector<std::string> split(std::string_view line, char sep = ',') {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  [[nodiscard]] std::size_t column(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return i;
    return header.size();
  }
};

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open input file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Comma-separated table with a header row; blank and '#' lines are skipped.
inline CsvTable read_csv(const std::string& path) {
  const std::string text = read_file(path);
  CsvTable t;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string s = trim(line);
    if (s.empty() || s.front() == '#') continue;
    auto cells = split(s);
    if (t.header.empty()) {
      t.header = std::move(cells);
      continue;
    }
    if (cells.size() != t.header.size())
      throw FormatError(path + ":" + std::to_string(lineno) + ": expected " + std::to_string(t.header.size()) +
                        " columns, found " + std::to_string(cells.size()));
    t.rows.push_back(std::move(cells));
  }
  if (t.header.empty()) throw FormatError("'" + path + "' has no header row");
  return t;
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write output file '" + path + "'");
  out << content;
  if (!out) throw FormatError("failed writing '" + path + "'");
}

/// Reads the single numeric column `name` (e.g. `sample` or `rr_ms`).
inline std::vector<double> read_column(const CsvTable& t, std::string_view name, const std::string& path) {
  const std::size_t c = t.column(name);
  if (c == t.header.size()) throw FormatError("'" + path + "' has no '" + std::string(name) + "' column");
  std::vector<double> v;
  v.reserve(t.rows.size());
  for (const auto& r : t.rows) v.push_back(parse_double(r[c], path));
  return v;
}

inline std::string feature_header() {
  std::string h;
  for (auto n : FeatureRecord::kNames) {
    h += n;
    h += ',';
  }
  return h + "label\n";
}

inline std::string feature_row(const FeatureRecord& r, int label) {
  std::string line;
  for (double v : r.values()) {
    line += format_double(v);
    line += ',';
  }
  return line + std::to_string(label) + "\n";
}

/// Reads a feature matrix: every column except `label` is a feature.
inline Dataset read_feature_matrix(const std::string& path, std::vector<std::string>* names = nullptr) {
  const auto t = read_csv(path);
  const std::size_t lc = t.column("label");
  if (lc == t.header.size()) throw FormatError("'" + path + "' has no 'label' column");
  if (t.header.size() < 2) throw FormatError("'" + path + "' has no feature columns");
  if (names) {
    names->clear();
    for (std::size_t i = 0; i < t.header.size(); ++i)
      if (i != lc) names->push_back(t.header[i]);
  }
  std::vector<double> flat;
  std::vector<int> labels;
  for (const auto& r : t.rows) {
    for (std::size_t i = 0; i < r.size(); ++i)
      if (i != lc) flat.push_back(parse_double(r[i], path));
    const double l = parse_double(r[lc], path);
    if (l != 0.0 && l != 1.0)
      throw ParameterError("'" + path + "' contains non-binary label '" + r[lc] + "'; labels must be 0 or 1");
    labels.push_back(static_cast<int>(l));
  }
  if (labels.empty()) throw InsufficientDataError("'" + path + "' contains no rows");
  return Dataset(t.header.size() - 1, std::move(flat), std::move(labels));
}

inline std::string join(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ',';
    s += format_double(v[i]);
  }
  return s;
}

/// Weight file: `# topology = a,b,c`, optional `# key = value` lines, then one
/// parameter per line in flat layout order.
inline std::string weights_text(const MlpTopology& topo, std::span<const double> params,
                                const std::vector<std::pair<std::string, std::string>>& extra = {}) {
  std::string s = "# topology = " + topo.describe() + "\n";
  for (const auto& [k, v] : extra) s += "# " + k + " = " + v + "\n";
  for (double p : params) s += format_double(p) + "\n";
  return s;
}

struct WeightFile {
  std::vector<std::size_t> topology;
  std::vector<double> params;
  std::vector<std::pair<std::string, std::string>> meta;
};

inline WeightFile read_weights(const std::string& path) {
  const std::string text = read_file(path);
  WeightFile w;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    const std::string s = trim(line);
    if (s.empty()) continue;
    if (s.front() == '#') {
      const auto eq = s.find('=');
      if (eq == std::string::npos) continue;
      const std::string key = trim(std::string_view(s).substr(1, eq - 1));
      const std::string val = trim(std::string_view(s).substr(eq + 1));
      if (key == "topology") {
        for (const auto& part : split(val)) w.topology.push_back(static_cast<std::size_t>(parse_double(part, path)));
      } else {
        w.meta.emplace_back(key, val);
      }
      continue;
    }
    w.params.push_back(parse_double(s, path));
  }
  if (w.topology.empty()) throw FormatError("'" + path + "' lacks a '# topology = ...' line");
  if (MlpTopology(w.topology).param_count() != w.params.size())
    throw ShapeError("'" + path + "' holds " + std::to_string(w.params.size()) + " values, topology needs " +
                     std::to_string(MlpTopology(w.topology).param_count()));
  return w;
}

}  // namespace codel::io
