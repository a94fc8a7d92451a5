#pragma once

#include "gridy/types.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace gridy {

/// A numeric table read from CSV: a header row of column names followed by
/// numeric rows. An optional leading label column is kept in `row_labels`.
struct CsvMatrix {
  std::vector<std::string> header;
  std::vector<std::string> row_labels;
  Matrix values;
};

/// Reads a CSV with a header row. When `has_row_labels` is set the first column
/// of every row (and of the header) is treated as a label, not a number.
/// Throws ConfigError naming the row and column of any non-numeric or
/// non-finite cell.
CsvMatrix read_csv_matrix(const std::filesystem::path& path, bool has_row_labels = false);

/// Writes values with shortest round-trip formatting. Row labels, when given,
/// become a leading column whose header is `corner`.
void write_csv_matrix(const std::filesystem::path& path, const Matrix& values,
                      const std::vector<std::string>& header,
                      const std::vector<std::string>& row_labels = {},
                      const std::string& corner = "");

/// Shortest representation that parses back to the identical double.
std::string format_double(double value);

/// Default column names v1..vn.
std::vector<std::string> default_names(Eigen::Index n, const std::string& prefix);

}  // namespace gridy
