#include "gridy/csv.hpp"

#include "gridy/error.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace gridy {

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) {
    // Trim whitespace and optional surrounding quotes.
    auto first = cell.find_first_not_of(" \t\r");
    auto last = cell.find_last_not_of(" \t\r");
    cell = first == std::string::npos ? std::string() : cell.substr(first, last - first + 1);
    if (cell.size() >= 2 && cell.front() == '"' && cell.back() == '"') cell = cell.substr(1, cell.size() - 2);
    cells.push_back(cell);
  }
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

}  // namespace

std::string format_double(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) throw NumericalError("format_double: conversion failed");
  return std::string(buf, ptr);
}

std::vector<std::string> default_names(Eigen::Index n, const std::string& prefix) {
  std::vector<std::string> names;
  names.reserve(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) names.push_back(prefix + std::to_string(i + 1));
  return names;
}

CsvMatrix read_csv_matrix(const std::filesystem::path& path, bool has_row_labels) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open CSV file " + path.string());
  CsvMatrix out;
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("empty CSV file " + path.string());
  out.header = split_line(line);
  if (has_row_labels && !out.header.empty()) out.header.erase(out.header.begin());
  const std::size_t ncols = out.header.size();
  if (ncols == 0) throw ConfigError("CSV file " + path.string() + " has no columns");

  std::vector<std::vector<double>> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto cells = split_line(line);
    if (has_row_labels) {
      if (cells.empty()) throw ConfigError(path.string() + ": missing row label at line " + std::to_string(line_no));
      out.row_labels.push_back(cells.front());
      cells.erase(cells.begin());
    }
    if (cells.size() != ncols) {
      throw ConfigError(path.string() + ": column-count mismatch at line " + std::to_string(line_no) +
                        " (expected " + std::to_string(ncols) + ", found " + std::to_string(cells.size()) + ")");
    }
    std::vector<double> row(ncols);
    for (std::size_t j = 0; j < ncols; ++j) {
      const std::string& cell = cells[j];
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (ec != std::errc() || ptr != cell.data() + cell.size() || cell.empty()) {
        throw ConfigError(path.string() + ": non-numeric cell '" + cell + "' at row " +
                          std::to_string(rows.size() + 1) + ", column " + std::to_string(j + 1) + " (" +
                          out.header[j] + ")");
      }
      if (!std::isfinite(v)) {
        throw ConfigError(path.string() + ": non-finite value '" + cell + "' at row " +
                          std::to_string(rows.size() + 1) + ", column " + std::to_string(j + 1) + " (" +
                          out.header[j] + ")");
      }
      row[j] = v;
    }
    rows.push_back(std::move(row));
  }
  out.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(ncols));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < ncols; ++j)
      out.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  return out;
}

void write_csv_matrix(const std::filesystem::path& path, const Matrix& values,
                      const std::vector<std::string>& header, const std::vector<std::string>& row_labels,
                      const std::string& corner) {
  if (static_cast<Eigen::Index>(header.size()) != values.cols())
    throw ConfigError("write_csv_matrix: header size does not match column count for " + path.string());
  if (!row_labels.empty() && static_cast<Eigen::Index>(row_labels.size()) != values.rows())
    throw ConfigError("write_csv_matrix: row label count does not match row count for " + path.string());
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write CSV file " + path.string());
  const bool labelled = !row_labels.empty();
  if (labelled) out << corner << (header.empty() ? "" : ",");
  for (std::size_t j = 0; j < header.size(); ++j) out << (j ? "," : "") << header[j];
  out << '\n';
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    if (labelled) out << row_labels[static_cast<std::size_t>(i)] << (values.cols() ? "," : "");
    for (Eigen::Index j = 0; j < values.cols(); ++j) out << (j ? "," : "") << format_double(values(i, j));
    out << '\n';
  }
}

}  // namespace gridy
