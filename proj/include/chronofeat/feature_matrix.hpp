#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "chronofeat/folds.hpp"

namespace chronofeat {

/// Dense float32 feature matrix over an ordered row subset. Missing values
/// are NaN. Serialized as the FMX1 container (little endian, bit exact) or
/// as CSV for interop.
struct FeatureMatrix {
  std::vector<std::uint64_t> row_ids;
  std::vector<std::string> column_names;
  std::vector<float> values;  // row-major, n_rows() x n_cols()
  std::vector<std::uint8_t> labels;
  std::vector<std::uint8_t> split_tags;  // Split enum values

  std::size_t n_rows() const { return row_ids.size(); }
  std::size_t n_cols() const { return column_names.size(); }

  float at(std::size_t row, std::size_t col) const { return values[row * n_cols() + col]; }
  float& at(std::size_t row, std::size_t col) { return values[row * n_cols() + col]; }

  /// Index of a named column, or -1.
  int column_index(const std::string& name) const;

  /// Checks dimension consistency and column-name uniqueness.
  void validate() const;

  /// Rows whose split tag equals `tag`, same columns.
  FeatureMatrix slice(Split tag) const;
};

void write_matrix(const FeatureMatrix& m, const std::string& path);
FeatureMatrix read_matrix(const std::string& path);

/// CSV export with header row_id,label,split,<columns...>; NaN serialized
/// as an empty field.
void write_matrix_csv(const FeatureMatrix& m, std::ostream& out);
void write_matrix_csv_file(const FeatureMatrix& m, const std::string& path);
FeatureMatrix read_matrix_csv(std::istream& in);

}  // namespace chronofeat
