#include <doctest.h>

#include <sstream>
#include <string>
#include <vector>

#include "chronofeat/common.hpp"
#include "chronofeat/csv.hpp"

using namespace chronofeat;

namespace {

std::vector<std::vector<std::string>> read_all(const std::string& text) {
  std::istringstream in(text);
  CsvReader reader(in);
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  while (reader.read_row(row)) rows.push_back(row);
  return rows;
}

}  // namespace

TEST_SUITE("csv") {
  TEST_CASE("plain rows") {
    const auto rows = read_all("a,b,c\n1,2,3\n");
    REQUIRE(rows.size() == 2);
    CHECK(rows[0] == std::vector<std::string>{"a", "b", "c"});
    CHECK(rows[1] == std::vector<std::string>{"1", "2", "3"});
  }

  TEST_CASE("missing trailing newline still yields the last row") {
    const auto rows = read_all("a,b\n1,2");
    REQUIRE(rows.size() == 2);
    CHECK(rows[1] == std::vector<std::string>{"1", "2"});
  }

  TEST_CASE("empty fields") {
    const auto rows = read_all("a,,c\n,\n");
    REQUIRE(rows.size() == 2);
    CHECK(rows[0] == std::vector<std::string>{"a", "", "c"});
    CHECK(rows[1] == std::vector<std::string>{"", ""});
  }

  TEST_CASE("quoted fields: commas, doubled quotes, newlines") {
    const auto rows = read_all("\"a,b\",\"say \"\"hi\"\"\",\"two\nlines\"\n");
    REQUIRE(rows.size() == 1);
    CHECK(rows[0] == std::vector<std::string>{"a,b", "say \"hi\"", "two\nlines"});
  }

  TEST_CASE("CRLF line endings") {
    const auto rows = read_all("a,b\r\n1,2\r\n");
    REQUIRE(rows.size() == 2);
    CHECK(rows[0] == std::vector<std::string>{"a", "b"});
    CHECK(rows[1] == std::vector<std::string>{"1", "2"});
  }

  TEST_CASE("empty input yields no rows") {
    CHECK(read_all("").empty());
  }

  TEST_CASE("row_line tracks physical lines across embedded newlines") {
    std::istringstream in("a,\"x\ny\"\nb,c\n");
    CsvReader reader(in);
    std::vector<std::string> row;
    REQUIRE(reader.read_row(row));
    CHECK(reader.row_line() == 1);
    REQUIRE(reader.read_row(row));
    CHECK(row == std::vector<std::string>{"b", "c"});
    CHECK(reader.row_line() == 3);
  }

  TEST_CASE("csv_field quotes only when needed") {
    CHECK(csv_field("plain") == "plain");
    CHECK(csv_field("a,b") == "\"a,b\"");
    CHECK(csv_field("say \"hi\"") == "\"say \"\"hi\"\"\"");
    CHECK(csv_field("two\nlines") == "\"two\nlines\"");
  }

  TEST_CASE("write then read round trips awkward fields") {
    const std::vector<std::string> fields = {"plain", "a,b", "q\"uote", "nl\nnl", "", "end"};
    std::ostringstream out;
    write_csv_row(out, fields);
    const auto rows = read_all(out.str());
    REQUIRE(rows.size() == 1);
    CHECK(rows[0] == fields);
  }
}
