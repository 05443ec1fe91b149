#pragma once

// Record emission: CSV or JSON lines, floats with 17 significant digits so
// every value parses back bit-exactly.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <span>
#include <string>

#include "alexr/algorithms/run.hpp"
#include "alexr/error.hpp"

namespace alexr {

enum class RecordFormat { csv, json_lines };

inline std::string to_string(RecordFormat f) {
  return f == RecordFormat::csv ? "csv" : "json_lines";
}

inline std::string record_extension(RecordFormat f) {
  return f == RecordFormat::csv ? ".csv" : ".jsonl";
}

inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace detail {
inline std::string json_number(double v) {
  return std::isfinite(v) ? format_double(v) : "null";
}

inline std::string json_string(const std::string& s) {
  std::string out = "\"";
  for (char ch : s) {
    switch (ch) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      default:
        if (static_cast<unsigned char>(ch) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof buf, "\\u%04x", static_cast<unsigned>(ch));
          out += buf;
        } else {
          out += ch;
        }
    }
  }
  return out + "\"";
}
}  // namespace detail

inline constexpr const char* kRecordHeader = "solver,seed,t,oracle_count,objective,gap,wall_nanos";

inline void write_records(std::ostream& out, std::span<const RunRecord> records,
                          RecordFormat format) {
  if (format == RecordFormat::csv) out << kRecordHeader << '\n';
  for (const auto& rec : records)
    for (const auto& row : rec.rows) {
      if (format == RecordFormat::csv) {
        out << rec.solver << ',' << rec.seed << ',' << row.t << ',' << row.oracle_count << ','
            << format_double(row.objective) << ',' << format_double(row.gap) << ','
            << row.wall_nanos << '\n';
      } else {
        out << "{\"solver\":" << detail::json_string(rec.solver) << ",\"seed\":" << rec.seed
            << ",\"t\":" << row.t << ",\"oracle_count\":" << row.oracle_count
            << ",\"objective\":" << detail::json_number(row.objective)
            << ",\"gap\":" << detail::json_number(row.gap)
            << ",\"wall_nanos\":" << row.wall_nanos << "}\n";
      }
    }
}

inline void emit_records(std::span<const RunRecord> records, const std::string& path,
                         RecordFormat format) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  write_records(out, records, format);
  out.flush();
  if (!out) throw Error("failed writing '" + path + "'");
}

inline void emit_records(const RunRecord& record, const std::string& path,
                         RecordFormat format) {
  emit_records(std::span<const RunRecord>(&record, 1), path, format);
}

}  // namespace alexr
