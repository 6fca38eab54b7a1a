#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

namespace chronofeat {

/// RFC 4180 CSV reader over an input stream. Quoted fields may contain
/// commas, doubled quotes and newlines; rows end at LF or CRLF.
class CsvReader {
 public:
  explicit CsvReader(std::istream& in) : in_(in) {}

  /// Reads the next record into `fields`. Returns false at end of input.
  bool read_row(std::vector<std::string>& fields);

  /// Physical line number (1-based) where the last record started.
  std::size_t row_line() const { return row_line_; }

 private:
  std::istream& in_;
  std::size_t line_ = 1;
  std::size_t row_line_ = 0;
};

/// Quotes a field if it contains a comma, quote or newline.
std::string csv_field(const std::string& value);

void write_csv_row(std::ostream& out, const std::vector<std::string>& fields);

}  // namespace chronofeat
