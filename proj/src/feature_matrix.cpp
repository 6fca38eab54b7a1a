#include "chronofeat/feature_matrix.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <unordered_set>

#include "chronofeat/common.hpp"
#include "chronofeat/csv.hpp"

namespace chronofeat {

static_assert(std::endian::native == std::endian::little,
              "FMX serialization assumes a little-endian host");

int FeatureMatrix::column_index(const std::string& name) const {
  for (std::size_t i = 0; i < column_names.size(); ++i) {
    if (column_names[i] == name) return static_cast<int>(i);
  }
  return -1;
}

void FeatureMatrix::validate() const {
  if (values.size() != n_rows() * n_cols())
    fail("matrix values size ", values.size(), " != ", n_rows(), " x ", n_cols());
  if (labels.size() != n_rows() || split_tags.size() != n_rows())
    fail("matrix labels/split_tags size does not match row count");
  std::unordered_set<std::string> seen;
  for (const auto& c : column_names) {
    if (!seen.insert(c).second) fail("duplicate matrix column '", c, "'");
  }
}

FeatureMatrix FeatureMatrix::slice(Split tag) const {
  FeatureMatrix out;
  out.column_names = column_names;
  for (std::size_t r = 0; r < n_rows(); ++r) {
    if (split_tags[r] != static_cast<std::uint8_t>(tag)) continue;
    out.row_ids.push_back(row_ids[r]);
    out.labels.push_back(labels[r]);
    out.split_tags.push_back(split_tags[r]);
    out.values.insert(out.values.end(), values.begin() + static_cast<std::ptrdiff_t>(r * n_cols()),
                      values.begin() + static_cast<std::ptrdiff_t>((r + 1) * n_cols()));
  }
  return out;
}

namespace {

constexpr char kMagic[4] = {'F', 'M', 'X', '1'};
constexpr std::uint16_t kVersion = 1;

template <typename T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

template <typename T>
T get(std::istream& in, const char* what) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  if (!in) fail("truncated matrix file while reading ", what);
  return v;
}

}  // namespace

void write_matrix(const FeatureMatrix& m, const std::string& path) {
  m.validate();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail("cannot write matrix file: ", path);
  out.write(kMagic, 4);
  put(out, kVersion);
  put(out, static_cast<std::uint64_t>(m.n_rows()));
  put(out, static_cast<std::uint32_t>(m.n_cols()));
  for (const auto& name : m.column_names) {
    put(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
  }
  out.write(reinterpret_cast<const char*>(m.row_ids.data()),
            static_cast<std::streamsize>(m.row_ids.size() * sizeof(std::uint64_t)));
  out.write(reinterpret_cast<const char*>(m.labels.data()),
            static_cast<std::streamsize>(m.labels.size()));
  out.write(reinterpret_cast<const char*>(m.split_tags.data()),
            static_cast<std::streamsize>(m.split_tags.size()));
  out.write(reinterpret_cast<const char*>(m.values.data()),
            static_cast<std::streamsize>(m.values.size() * sizeof(float)));
  if (!out) fail("write failed for matrix file: ", path);
}

FeatureMatrix read_matrix(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("cannot open matrix file: ", path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0)
    fail("not an FMX1 matrix file: ", path);
  const auto version = get<std::uint16_t>(in, "version");
  if (version != kVersion) fail("unsupported FMX version ", version, " in ", path);
  const auto n_rows = get<std::uint64_t>(in, "row count");
  const auto n_cols = get<std::uint32_t>(in, "column count");

  FeatureMatrix m;
  m.column_names.reserve(n_cols);
  for (std::uint32_t i = 0; i < n_cols; ++i) {
    const auto len = get<std::uint32_t>(in, "column name length");
    std::string name(len, '\0');
    in.read(name.data(), len);
    if (!in) fail("truncated matrix file while reading column names: ", path);
    m.column_names.push_back(std::move(name));
  }
  m.row_ids.resize(n_rows);
  in.read(reinterpret_cast<char*>(m.row_ids.data()),
          static_cast<std::streamsize>(n_rows * sizeof(std::uint64_t)));
  m.labels.resize(n_rows);
  in.read(reinterpret_cast<char*>(m.labels.data()), static_cast<std::streamsize>(n_rows));
  m.split_tags.resize(n_rows);
  in.read(reinterpret_cast<char*>(m.split_tags.data()), static_cast<std::streamsize>(n_rows));
  m.values.resize(static_cast<std::size_t>(n_rows) * n_cols);
  in.read(reinterpret_cast<char*>(m.values.data()),
          static_cast<std::streamsize>(m.values.size() * sizeof(float)));
  if (!in) fail("truncated matrix file: ", path);
  m.validate();
  return m;
}

void write_matrix_csv(const FeatureMatrix& m, std::ostream& out) {
  std::vector<std::string> row{"row_id", "label", "split"};
  for (const auto& c : m.column_names) row.push_back(c);
  write_csv_row(out, row);
  for (std::size_t r = 0; r < m.n_rows(); ++r) {
    row.clear();
    row.push_back(num_str(m.row_ids[r]));
    row.push_back(m.labels[r] ? "1" : "0");
    row.push_back(split_name(static_cast<Split>(m.split_tags[r])));
    for (std::size_t c = 0; c < m.n_cols(); ++c) {
      float v = m.at(r, c);
      row.push_back(std::isnan(v) ? std::string() : num_str(v));
    }
    write_csv_row(out, row);
  }
}

void write_matrix_csv_file(const FeatureMatrix& m, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail("cannot write matrix CSV: ", path);
  write_matrix_csv(m, out);
}

FeatureMatrix read_matrix_csv(std::istream& in) {
  CsvReader reader(in);
  std::vector<std::string> fields;
  if (!reader.read_row(fields)) fail("empty matrix CSV");
  if (fields.size() < 3 || fields[0] != "row_id" || fields[1] != "label" || fields[2] != "split")
    fail("matrix CSV must start with row_id,label,split columns");
  FeatureMatrix m;
  m.column_names.assign(fields.begin() + 3, fields.end());
  const std::size_t n_cols = m.column_names.size();
  while (reader.read_row(fields)) {
    if (fields.size() != n_cols + 3)
      fail("malformed matrix CSV row at line ", reader.row_line());
    m.row_ids.push_back(parse_uint64(fields[0], "row_id"));
    m.labels.push_back(fields[1] == "1" ? 1 : 0);
    std::uint8_t tag = static_cast<std::uint8_t>(Split::excluded);
    for (std::uint8_t t = 0; t < 4; ++t) {
      if (fields[2] == split_name(static_cast<Split>(t))) tag = t;
    }
    m.split_tags.push_back(tag);
    for (std::size_t c = 0; c < n_cols; ++c) {
      const std::string& text = fields[3 + c];
      if (text.empty()) {
        m.values.push_back(std::numeric_limits<float>::quiet_NaN());
      } else {
        m.values.push_back(static_cast<float>(parse_double(text, "matrix value")));
      }
    }
  }
  m.validate();
  return m;
}

}  // namespace chronofeat
