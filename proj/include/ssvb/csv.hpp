#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ssvb/data.hpp"

namespace ssvb {

namespace detail {

inline std::vector<double> parse_csv_row(const std::string& line,
                                         std::size_t row_index) {
  std::vector<double> out;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    // trim spaces and a possible trailing CR
    const auto first = cell.find_first_not_of(" \t\r");
    if (first == std::string::npos) {
      throw std::runtime_error("CSV row " + std::to_string(row_index) +
                               ": empty field");
    }
    const auto last = cell.find_last_not_of(" \t\r");
    cell = cell.substr(first, last - first + 1);
    std::size_t pos = 0;
    double v;
    try {
      v = std::stod(cell, &pos);
    } catch (const std::exception&) {
      throw std::runtime_error("CSV row " + std::to_string(row_index) +
                               ": cannot parse '" + cell + "'");
    }
    if (pos != cell.size())
      throw std::runtime_error("CSV row " + std::to_string(row_index) +
                               ": trailing characters in '" + cell + "'");
    out.push_back(v);
  }
  return out;
}

}  // namespace detail

/// Reads a rectangular numeric CSV (no header unless skip_header). Rows with
/// the wrong number of fields are reported by index (1-based, after any
/// skipped header).
inline Matrix read_csv_matrix(const std::string& path, bool skip_header = false) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t row_index = 0;
  bool first = true;
  while (std::getline(in, line)) {
    if (first && skip_header) {
      first = false;
      continue;
    }
    first = false;
    if (line.empty() || line == "\r") continue;
    ++row_index;
    auto row = detail::parse_csv_row(line, row_index);
    if (!rows.empty() && row.size() != rows.front().size())
      throw std::runtime_error("CSV row " + std::to_string(row_index) + ": has " +
                               std::to_string(row.size()) + " fields, expected " +
                               std::to_string(rows.front().size()));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::runtime_error(path + ": no data rows");
  Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j)
      m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  if (!m.allFinite()) throw std::runtime_error(path + ": non-finite entry");
  return m;
}

/// Reads a CSV holding one value per row (or a single row of values).
inline Vector read_csv_vector(const std::string& path, bool skip_header = false) {
  const Matrix m = read_csv_matrix(path, skip_header);
  if (m.cols() == 1) return m.col(0);
  if (m.rows() == 1) return m.row(0).transpose();
  throw std::runtime_error(path + ": expected a single column or row");
}

}  // namespace ssvb
