#pragma once

// Minimal numeric CSV: ',' delimiter, LF line endings, '.' decimal point,
// 17 significant digits so that write-then-read reproduces every double.
// Formatting and parsing go through <charconv>, which ignores the locale.

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "slasso/error.hpp"
#include "slasso/linalg.hpp"

namespace slasso::csv {

class CsvError : public Error {
 public:
  explicit CsvError(const std::string& what) : Error(what) {}
};

/// Shortest round-trip is not required; a fixed 17 significant digits keeps
/// the output independent of the standard library's shortest-repr choices.
inline std::string format(double v) {
  if (std::isnan(v)) return {};
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

inline double parse(std::string_view field, std::size_t line, std::size_t col) {
  while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) field.remove_prefix(1);
  while (!field.empty() && (field.back() == ' ' || field.back() == '\t' || field.back() == '\r'))
    field.remove_suffix(1);
  if (!field.empty() && field.front() == '+') field.remove_prefix(1);
  double v = 0.0;
  const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
  if (field.empty() || res.ec != std::errc() || res.ptr != field.data() + field.size()) {
    throw CsvError("line " + std::to_string(line) + ", field " + std::to_string(col) +
                   ": not a number: '" + std::string(field) + "'");
  }
  return v;
}

/// Reads a rectangular table of numbers. Blank lines are skipped; every
/// non-blank line must have the same number of fields.
inline std::vector<std::vector<double>> read_rows(std::istream& in) {
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::vector<double> row;
    std::size_t start = 0;
    for (std::size_t col = 1;; ++col) {
      const std::size_t comma = line.find(',', start);
      const std::string_view field(line.data() + start,
                                   (comma == std::string::npos ? line.size() : comma) - start);
      row.push_back(parse(field, lineno, col));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw CsvError("line " + std::to_string(lineno) + ": expected " +
                     std::to_string(rows.front().size()) + " fields, found " + std::to_string(row.size()));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw CsvError("no data rows");
  return rows;
}

inline Matrix read_matrix(std::istream& in) {
  const auto rows = read_rows(in);
  Matrix m(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      if (!std::isfinite(rows[i][j])) {
        throw CsvError("row " + std::to_string(i + 1) + ", column " + std::to_string(j + 1) +
                       ": non-finite value");
      }
      m(i, j) = rows[i][j];
    }
  return m;
}

inline Matrix read_matrix_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CsvError("cannot open '" + path + "'");
  try {
    return read_matrix(in);
  } catch (const CsvError& e) {
    throw CsvError(path + ": " + e.what());
  }
}

/// A single column (or a single row) of numbers as a vector.
inline std::vector<double> read_vector_file(const std::string& path) {
  const Matrix m = read_matrix_file(path);
  if (m.cols() == 1) return m.column(0);
  if (m.rows() == 1) {
    const auto r = m.row(0);
    return {r.begin(), r.end()};
  }
  throw CsvError(path + ": expected a single column of values");
}

inline void write_row(std::ostream& out, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out << ',';
    out << fields[i];
  }
  out << '\n';
}

inline void write_matrix(std::ostream& out, const Matrix& m) {
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      out << format(m(i, j));
    }
    out << '\n';
  }
}

inline std::string to_string(const Matrix& m) {
  std::ostringstream os;
  write_matrix(os, m);
  return os.str();
}

/// Writes a fully formatted file in one call.
inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CsvError("cannot open '" + path + "' for writing");
  out << content;
  if (!out) throw CsvError("write to '" + path + "' failed");
}

}  // namespace slasso::csv
