#pragma once

// Numeric CSV tables: header row required, '.' decimal point, no missing values.

#include <Eigen/Dense>

#include <string>
#include <string_view>
#include <vector>

namespace depshap {

struct Table {
  std::vector<std::string> names;
  Eigen::MatrixXd values;

  Eigen::Index rows() const { return values.rows(); }
  int columns() const { return static_cast<int>(names.size()); }
  // Index of a column; throws SchemaError naming it when absent.
  int column(const std::string& name) const;
  Table without(const std::string& name) const;
  Table select(const std::vector<std::string>& columns) const;
};

/// Throws SchemaError naming the offending columns for non-numeric cells and
/// the column and line for missing or non-finite cells.
Table parse_csv(std::string_view text, const std::string& source = "csv");
Table read_csv(const std::string& path);

// Values use the shortest round-trip decimal form, so parse_csv(format_csv(t)) == t.
std::string format_csv(const Table& table);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace depshap
