#pragma once

// Readers for LIBSVM sparse text and grouped CSV tables.

#include <algorithm>
#include <cerrno>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "alexr/error.hpp"
#include "alexr/instances/gdro.hpp"

namespace alexr {

struct SparseEntry {
  std::uint32_t index = 0;  // 1-based, as in the file
  double value = 0.0;
  bool operator==(const SparseEntry&) const = default;
};

using SparseRow = std::vector<SparseEntry>;

struct LibsvmData {
  Vector labels;
  std::vector<SparseRow> rows;
  std::size_t dim = 0;  // largest index seen

  std::size_t size() const { return labels.size(); }

  /// Row-major dense copy with `d` columns (defaults to dim).
  Vector dense(std::size_t d = 0) const {
    if (d == 0) d = dim;
    Vector out(rows.size() * d, 0.0);
    for (std::size_t r = 0; r < rows.size(); ++r)
      for (const auto& e : rows[r])
        if (e.index <= d) out[r * d + e.index - 1] = e.value;
    return out;
  }
};

namespace detail {

inline bool parse_double(const std::string& tok, double& out) {
  if (tok.empty()) return false;
  errno = 0;
  char* end = nullptr;
  out = std::strtod(tok.c_str(), &end);
  return errno == 0 && end == tok.c_str() + tok.size();
}

inline bool parse_index(const std::string& tok, std::uint32_t& out) {
  if (tok.empty() || tok.find_first_not_of("0123456789") != std::string::npos) return false;
  errno = 0;
  const unsigned long long v = std::strtoull(tok.c_str(), nullptr, 10);
  if (errno != 0 || v == 0 || v > 0xffffffffULL) return false;
  out = static_cast<std::uint32_t>(v);
  return true;
}

inline std::string fmt17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

inline LibsvmData parse_libsvm(std::istream& in) {
  LibsvmData data;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream ss(line);
    std::string tok;
    if (!(ss >> tok)) continue;
    double label = 0.0;
    if (!detail::parse_double(tok, label))
      throw ParseError(lineno, "label '" + tok + "' is not a number");
    SparseRow row;
    while (ss >> tok) {
      const auto colon = tok.find(':');
      if (colon == std::string::npos)
        throw ParseError(lineno, "token '" + tok + "' is not of the form index:value");
      SparseEntry e;
      if (!detail::parse_index(tok.substr(0, colon), e.index))
        throw ParseError(lineno, "bad feature index in '" + tok + "'");
      if (!detail::parse_double(tok.substr(colon + 1), e.value))
        throw ParseError(lineno, "bad feature value in '" + tok + "'");
      if (!row.empty() && e.index <= row.back().index)
        throw ParseError(lineno, "feature indices must be strictly increasing");
      row.push_back(e);
    }
    if (!row.empty()) data.dim = std::max<std::size_t>(data.dim, row.back().index);
    data.labels.push_back(label);
    data.rows.push_back(std::move(row));
  }
  return data;
}

inline void write_libsvm(std::ostream& out, const LibsvmData& data) {
  for (std::size_t r = 0; r < data.size(); ++r) {
    out << detail::fmt17(data.labels[r]);
    for (const auto& e : data.rows[r]) out << ' ' << e.index << ':' << detail::fmt17(e.value);
    out << '\n';
  }
}

// ---------------------------------------------------------------------------
// Grouped CSV

struct CsvOptions {
  std::string group_column = "group";
  std::string label_column = "label";
  /// Feature columns; empty means every column except group and label.
  std::vector<std::string> feature_columns;
  /// Groups with fewer samples are dropped.
  std::size_t min_group_size = 1;
  /// Groups kept with fewer samples than this trigger a warning.
  std::size_t warn_group_size = 2;
};

struct GroupedCsv {
  GroupedDataset data;
  std::vector<std::string> group_names;
  std::vector<std::string> feature_names;
  std::vector<std::string> warnings;
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

/// Comma split with double-quoted fields ("" escapes a quote).
inline std::vector<std::string> split_csv(const std::string& line, std::size_t lineno) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t k = 0; k < line.size(); ++k) {
    const char ch = line[k];
    if (quoted) {
      if (ch == '"') {
        if (k + 1 < line.size() && line[k + 1] == '"') {
          cur += '"';
          ++k;
        } else {
          quoted = false;
        }
      } else {
        cur += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += ch;
    }
  }
  if (quoted) throw ParseError(lineno, "unterminated quoted field");
  out.push_back(trim(cur));
  return out;
}

}  // namespace detail

inline GroupedCsv load_grouped_csv(std::istream& in, const CsvOptions& opt = {}) {
  std::string line;
  std::size_t lineno = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++lineno;
    if (!detail::trim(line).empty()) {
      header = detail::split_csv(line, lineno);
      break;
    }
  }
  if (header.empty()) throw ParseError(lineno, "missing header row");

  auto column = [&](const std::string& name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw ParseError(1, "missing column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t gcol = column(opt.group_column);
  const std::size_t lcol = column(opt.label_column);
  std::vector<std::size_t> fcols;
  GroupedCsv out;
  if (opt.feature_columns.empty()) {
    for (std::size_t c = 0; c < header.size(); ++c)
      if (c != gcol && c != lcol) {
        fcols.push_back(c);
        out.feature_names.push_back(header[c]);
      }
  } else {
    for (const auto& name : opt.feature_columns) {
      fcols.push_back(column(name));
      out.feature_names.push_back(name);
    }
  }

  std::vector<std::string> group_names;
  std::unordered_map<std::string, std::uint32_t> group_ids;
  std::vector<std::uint32_t> raw_group;
  Vector raw_labels;
  Vector raw_features;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::trim(line).empty()) continue;
    const auto cells = detail::split_csv(line, lineno);
    if (cells.size() != header.size())
      throw ParseError(lineno, "expected " + std::to_string(header.size()) + " fields, got " +
                                   std::to_string(cells.size()));
    const auto [it, fresh] =
        group_ids.emplace(cells[gcol], static_cast<std::uint32_t>(group_names.size()));
    if (fresh) group_names.push_back(cells[gcol]);
    raw_group.push_back(it->second);
    double label = 0.0;
    if (!detail::parse_double(cells[lcol], label))
      throw ParseError(lineno, "label '" + cells[lcol] + "' is not a number");
    raw_labels.push_back(label);
    for (auto c : fcols) {
      double v = 0.0;
      if (!detail::parse_double(cells[c], v))
        throw ParseError(lineno, "column '" + header[c] + "' value '" + cells[c] +
                                     "' is not a number");
      raw_features.push_back(v);
    }
  }

  const std::set<double> distinct(raw_labels.begin(), raw_labels.end());
  const bool zero_one = std::all_of(distinct.begin(), distinct.end(),
                                    [](double v) { return v == 0.0 || v == 1.0; });
  const bool plus_minus = std::all_of(distinct.begin(), distinct.end(),
                                      [](double v) { return v == -1.0 || v == 1.0; });
  if (!zero_one && !plus_minus)
    throw InvalidArgument("grouped csv: labels must be +-1 or {0,1}");
  if (zero_one)
    for (double& b : raw_labels) b = b == 0.0 ? -1.0 : 1.0;

  std::vector<std::size_t> sizes(group_names.size(), 0);
  for (auto g : raw_group) ++sizes[g];
  std::vector<std::int64_t> remap(group_names.size(), -1);
  for (std::size_t g = 0; g < group_names.size(); ++g) {
    if (sizes[g] < opt.min_group_size) {
      out.warnings.push_back("dropped group '" + group_names[g] + "' with " +
                             std::to_string(sizes[g]) + " samples");
      continue;
    }
    if (sizes[g] < opt.warn_group_size)
      out.warnings.push_back("group '" + group_names[g] + "' has only " +
                             std::to_string(sizes[g]) + " sample(s)");
    remap[g] = static_cast<std::int64_t>(out.group_names.size());
    out.group_names.push_back(group_names[g]);
  }
  if (out.group_names.empty()) throw InvalidArgument("grouped csv: no group left after filtering");

  auto& data = out.data;
  data.d = fcols.size();
  for (std::size_t s = 0; s < raw_group.size(); ++s) {
    if (remap[raw_group[s]] < 0) continue;
    data.group_of.push_back(static_cast<std::uint32_t>(remap[raw_group[s]]));
    data.labels.push_back(raw_labels[s]);
    data.features.insert(data.features.end(), raw_features.begin() + s * data.d,
                         raw_features.begin() + (s + 1) * data.d);
  }
  data.rebuild_index(out.group_names.size());
  data.validate();
  return out;
}

}  // namespace alexr
