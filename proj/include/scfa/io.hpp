#pragma once

#include "scfa/error.hpp"
#include "scfa/simulation.hpp"
#include "scfa/spatial_weights.hpp"

#include <Eigen/Dense>

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace scfa::io {

/// 17 significant digits; identical bytes for identical doubles.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct CsvTable {
  std::string path;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_numbers;  // 1-based source line of each row

  int column(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return static_cast<int>(i);
    return -1;
  }
};

inline std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur.push_back('"');
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(std::move(cur));
  return out;
}

inline CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError(path, 0, "cannot open file");
  CsvTable t;
  t.path = path;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (lineno == 1 && line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    if (line.empty()) continue;
    auto fields = split_csv_line(line);
    if (t.header.empty()) {
      t.header = std::move(fields);
      continue;
    }
    if (fields.size() != t.header.size())
      throw FormatError(path, lineno,
                        "expected " + std::to_string(t.header.size()) + " fields, got " +
                            std::to_string(fields.size()));
    t.rows.push_back(std::move(fields));
    t.line_numbers.push_back(lineno);
  }
  if (t.header.empty()) throw FormatError(path, 0, "missing header row");
  return t;
}

inline double parse_double(const CsvTable& t, std::size_t row, std::size_t col) {
  const std::string& s = t.rows[row][col];
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  while (first < last && *first == ' ') ++first;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || !std::isfinite(v))
    throw FormatError(t.path, t.line_numbers[row],
                      "column '" + t.header[col] + "': '" + s + "' is not a finite number");
  return v;
}

inline long long parse_int(const CsvTable& t, std::size_t row, std::size_t col) {
  const std::string& s = t.rows[row][col];
  long long v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw FormatError(t.path, t.line_numbers[row],
                      "column '" + t.header[col] + "': '" + s + "' is not an integer");
  return v;
}

inline void require_columns(const CsvTable& t, std::initializer_list<std::string_view> names) {
  for (std::size_t i = 0; i < names.size(); ++i) {
    const auto name = *(names.begin() + i);
    if (i >= t.header.size() || t.header[i] != name)
      throw FormatError(t.path, 1, "column " + std::to_string(i + 1) + " must be '" + std::string(name) + "'");
  }
}

/// Edge list with header `u,v,length`.
inline StationGraph read_edge_list(const std::string& path) {
  const CsvTable t = read_csv(path);
  require_columns(t, {"u", "v", "length"});
  StationGraph g;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    Edge e{parse_int(t, r, 0), parse_int(t, r, 1), parse_double(t, r, 2)};
    if (e.length < 0.0) throw FormatError(path, t.line_numbers[r], "negative edge length");
    g.edges.push_back(e);
  }
  return g;
}

struct SpatialDataset {
  LocationTable locs;
  Eigen::MatrixXd values;  // raw n x p
  std::vector<std::string> variable_names;
};

/// `id,x,y[,node_id],<variables...>`; with `locations_only` the variable
/// columns are ignored (a plain location table).
inline SpatialDataset read_spatial_csv(const std::string& path, bool locations_only = false) {
  const CsvTable t = read_csv(path);
  require_columns(t, {"id", "x", "y"});
  const bool has_node = t.header.size() > 3 && t.header[3] == "node_id";
  const std::size_t first_var = has_node ? 4 : 3;
  SpatialDataset ds;
  const auto n = static_cast<Eigen::Index>(t.rows.size());
  ds.locs.coords.resize(n, 2);
  if (has_node) ds.locs.node_ids.emplace();
  if (!locations_only)
    for (std::size_t c = first_var; c < t.header.size(); ++c) ds.variable_names.push_back(t.header[c]);
  ds.values.resize(n, static_cast<Eigen::Index>(ds.variable_names.size()));
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto i = static_cast<Eigen::Index>(r);
    ds.locs.ids.push_back(t.rows[r][0]);
    ds.locs.coords(i, 0) = parse_double(t, r, 1);
    ds.locs.coords(i, 1) = parse_double(t, r, 2);
    if (has_node) ds.locs.node_ids->push_back(parse_int(t, r, 3));
    for (std::size_t c = 0; c < ds.variable_names.size(); ++c)
      ds.values(i, static_cast<Eigen::Index>(c)) = parse_double(t, r, first_var + c);
  }
  return ds;
}

inline LocationTable read_locations(const std::string& path) {
  return read_spatial_csv(path, true).locs;
}

inline std::ofstream open_output(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

/// `id,x,y,group,X1..Xp` with 1-based groups.
inline void write_dataset_csv(const SyntheticDataset& ds, const std::filesystem::path& path) {
  auto out = open_output(path);
  out << "id,x,y,group";
  for (Eigen::Index j = 0; j < ds.data.cols(); ++j) out << ",X" << (j + 1);
  out << '\n';
  for (Eigen::Index i = 0; i < ds.data.rows(); ++i) {
    out << ds.locs.ids[static_cast<std::size_t>(i)] << ',' << format_double(ds.locs.coords(i, 0)) << ','
        << format_double(ds.locs.coords(i, 1)) << ',' << ds.true_partition.labels[static_cast<std::size_t>(i)] + 1;
    for (Eigen::Index j = 0; j < ds.data.cols(); ++j) out << ',' << format_double(ds.data(i, j));
    out << '\n';
  }
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace scfa::io
