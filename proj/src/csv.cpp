#include "chronofeat/csv.hpp"

#include <istream>
#include <ostream>

#include "chronofeat/common.hpp"

namespace chronofeat {

bool CsvReader::read_row(std::vector<std::string>& fields) {
  fields.clear();
  int c = in_.get();
  if (c == std::istream::traits_type::eof()) return false;
  row_line_ = line_;

  std::string field;
  bool in_quotes = false;
  bool quoted_field = false;
  while (true) {
    if (c == std::istream::traits_type::eof()) {
      if (in_quotes) fail("malformed CSV at line ", row_line_, ": unterminated quoted field");
      fields.push_back(std::move(field));
      return true;
    }
    char ch = static_cast<char>(c);
    if (in_quotes) {
      if (ch == '"') {
        int next = in_.peek();
        if (next == '"') {
          in_.get();
          field.push_back('"');
        } else {
          in_quotes = false;
        }
      } else {
        if (ch == '\n') ++line_;
        field.push_back(ch);
      }
    } else if (ch == '"') {
      if (!field.empty() || quoted_field)
        fail("malformed CSV at line ", line_, ": quote inside unquoted field");
      in_quotes = true;
      quoted_field = true;
    } else if (ch == ',') {
      fields.push_back(std::move(field));
      field.clear();
      quoted_field = false;
    } else if (ch == '\r') {
      // swallow; a following '\n' ends the row
    } else if (ch == '\n') {
      ++line_;
      fields.push_back(std::move(field));
      return true;
    } else {
      field.push_back(ch);
    }
    c = in_.get();
  }
}

std::string csv_field(const std::string& value) {
  bool needs_quote = false;
  for (char c : value) {
    if (c == ',' || c == '"' || c == '\n' || c == '\r') {
      needs_quote = true;
      break;
    }
  }
  if (!needs_quote) return value;
  std::string out = "\"";
  for (char c : value) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out.push_back('"');
  return out;
}

void write_csv_row(std::ostream& out, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out.put(',');
    out << csv_field(fields[i]);
  }
  out.put('\n');
}

}  // namespace chronofeat
