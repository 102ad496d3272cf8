#ifndef VECDGP_DATA_IO_HPP
#define VECDGP_DATA_IO_HPP

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "vecdgp/errors.hpp"

namespace vecdgp {

// Delimited text tables: one header row naming the columns, one numeric row
// per record, comma or whitespace separated. Lines starting with '#' are
// ignored (output files echo their configuration that way).
struct Table {
  std::vector<std::string> names;
  Eigen::MatrixXd values;
};

namespace detail {

inline std::vector<std::string> split_fields(const std::string& line, bool comma) {
  std::vector<std::string> out;
  if (comma) {
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) {
      // trim surrounding blanks
      const auto b = field.find_first_not_of(" \t\r");
      const auto e = field.find_last_not_of(" \t\r");
      out.push_back(b == std::string::npos ? "" : field.substr(b, e - b + 1));
    }
  } else {
    std::stringstream ss(line);
    std::string field;
    while (ss >> field) out.push_back(field);
  }
  return out;
}

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace detail

inline Table read_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open data file: " + path);
  Table table;
  std::string line;
  long line_no = 0;
  bool comma = false;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (table.names.empty()) {
      comma = line.find(',') != std::string::npos;
      table.names = detail::split_fields(line, comma);
      if (table.names.empty())
        throw DataError(path + ":" + std::to_string(line_no) + ": empty header row");
      continue;
    }
    const auto fields = detail::split_fields(line, comma);
    if (fields.size() != table.names.size())
      throw DataError(path + ":" + std::to_string(line_no) + ": expected " +
                      std::to_string(table.names.size()) + " fields, found " +
                      std::to_string(fields.size()));
    std::vector<double> row(fields.size());
    for (std::size_t j = 0; j < fields.size(); ++j) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(fields[j], &used);
      } catch (const std::exception&) {
        throw DataError(path + ":" + std::to_string(line_no) + ": cannot parse '" +
                        fields[j] + "' as a number");
      }
      if (used != fields[j].size())
        throw DataError(path + ":" + std::to_string(line_no) + ": trailing characters in '" +
                        fields[j] + "'");
      if (!std::isfinite(v))
        throw DataError(path + ":" + std::to_string(line_no) + ": non-finite cell '" +
                        fields[j] + "'");
      row[j] = v;
    }
    rows.push_back(std::move(row));
  }
  if (table.names.empty()) throw DataError(path + ": no header row found");
  table.values.resize(static_cast<Eigen::Index>(rows.size()),
                      static_cast<Eigen::Index>(table.names.size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      table.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  return table;
}

// Training files carry d input columns followed by one response column.
inline void split_xy(const Table& table, Eigen::MatrixXd& X, Eigen::VectorXd& Y) {
  if (table.values.cols() < 2)
    throw DataError("training table needs at least one input column and one response column");
  if (table.values.rows() < 1) throw DataError("training table has no data rows");
  X = table.values.leftCols(table.values.cols() - 1);
  Y = table.values.rightCols(1);
}

inline void write_table(const std::string& path, const std::vector<std::string>& comment_lines,
                        const std::vector<std::string>& names,
                        const Eigen::MatrixXd& values) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open output file for writing: " + path);
  for (const auto& c : comment_lines) out << "# " << c << "\n";
  for (std::size_t j = 0; j < names.size(); ++j)
    out << names[j] << (j + 1 < names.size() ? "," : "");
  out << "\n";
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    for (Eigen::Index j = 0; j < values.cols(); ++j)
      out << detail::format_double(values(i, j)) << (j + 1 < values.cols() ? "," : "");
    out << "\n";
  }
  if (!out) throw DataError("write failed: " + path);
}

// Square matrix without header (joint covariance output).
inline void write_matrix(const std::string& path, const std::vector<std::string>& comment_lines,
                         const Eigen::MatrixXd& m) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open output file for writing: " + path);
  for (const auto& c : comment_lines) out << "# " << c << "\n";
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      out << detail::format_double(m(i, j)) << (j + 1 < m.cols() ? "," : "");
    out << "\n";
  }
  if (!out) throw DataError("write failed: " + path);
}

}  // namespace vecdgp

#endif  // VECDGP_DATA_IO_HPP
