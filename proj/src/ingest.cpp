#include "chronofeat/ingest.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "chronofeat/common.hpp"
#include "chronofeat/csv.hpp"

namespace chronofeat {

void LogSchema::validate() const {
  std::unordered_set<std::string> seen{id_column, label_column, hour_column};
  if (seen.size() != 3) fail("schema id/label/hour columns must be distinct");
  for (const auto& c : categorical_columns) {
    if (!seen.insert(c).second) fail("schema column '", c, "' is duplicated");
  }
  if (categorical_columns.empty()) fail("schema needs at least one categorical column");
}

int LogSchema::categorical_index(const std::string& name) const {
  for (std::size_t i = 0; i < categorical_columns.size(); ++i) {
    if (categorical_columns[i] == name) return static_cast<int>(i);
  }
  return -1;
}

LogSchema LogSchema::avazu() {
  LogSchema s;
  s.categorical_columns = {
      "C1",        "banner_pos", "site_id",     "site_domain",      "site_category",
      "app_id",    "app_domain", "app_category", "device_id",       "device_ip",
      "device_model", "device_type", "device_conn_type", "C14",    "C15",
      "C16",       "C17",        "C18",         "C19",              "C20",
      "C21"};
  return s;
}

LogSchema schema_from_header(const std::vector<std::string>& header) {
  LogSchema s;
  s.categorical_columns.clear();
  bool have_id = false, have_label = false, have_hour = false;
  for (const auto& name : header) {
    if (name == s.id_column) have_id = true;
    else if (name == s.label_column) have_label = true;
    else if (name == s.hour_column) have_hour = true;
    else s.categorical_columns.push_back(name);
  }
  if (!have_id || !have_label || !have_hour)
    fail("header lacks id/click/hour columns; pass an explicit schema");
  s.validate();
  return s;
}

LogSchema load_schema_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open schema file: ", path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    fail("invalid schema JSON in ", path, ": ", e.what());
  }
  LogSchema s;
  s.id_column = j.value("id_column", s.id_column);
  s.label_column = j.value("label_column", s.label_column);
  s.hour_column = j.value("hour_column", s.hour_column);
  if (j.contains("categorical_columns"))
    s.categorical_columns = j.at("categorical_columns").get<std::vector<std::string>>();
  s.validate();
  return s;
}

void save_schema_json(const LogSchema& schema, const std::string& path) {
  nlohmann::json j;
  j["id_column"] = schema.id_column;
  j["label_column"] = schema.label_column;
  j["hour_column"] = schema.hour_column;
  j["categorical_columns"] = schema.categorical_columns;
  std::ofstream out(path);
  if (!out) fail("cannot write schema file: ", path);
  out << j.dump(2) << "\n";
}

std::vector<ImpressionEvent> parse_log(std::istream& in, const LogSchema& schema) {
  schema.validate();
  CsvReader reader(in);
  std::vector<std::string> fields;
  if (!reader.read_row(fields)) fail("empty input: missing header row");

  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < fields.size(); ++i) index.emplace(fields[i], i);
  auto column_at = [&](const std::string& name) {
    auto it = index.find(name);
    if (it == index.end()) fail("missing column '", name, "' in header");
    return it->second;
  };
  const std::size_t id_at = column_at(schema.id_column);
  const std::size_t label_at = column_at(schema.label_column);
  const std::size_t hour_at = column_at(schema.hour_column);
  std::vector<std::size_t> cat_at;
  cat_at.reserve(schema.categorical_columns.size());
  for (const auto& c : schema.categorical_columns) cat_at.push_back(column_at(c));
  const std::size_t n_header = fields.size();

  std::vector<ImpressionEvent> events;
  while (reader.read_row(fields)) {
    const std::size_t line = reader.row_line();
    if (fields.size() != n_header)
      fail("malformed row at line ", line, ": expected ", n_header, " fields, got ",
           fields.size());
    ImpressionEvent ev;
    ev.row_id = parse_uint64(fields[id_at], cat("row id at line ", line));
    const std::string& label = fields[label_at];
    if (label == "0") ev.click = 0;
    else if (label == "1") ev.click = 1;
    else fail("invalid label '", label, "' at line ", line, ": expected 0 or 1");
    try {
      ev.hour = parse_hour_yymmddhh(fields[hour_at]);
    } catch (const Error& e) {
      fail(e.what(), " at line ", line);
    }
    ev.cats.reserve(cat_at.size());
    for (std::size_t c : cat_at) ev.cats.push_back(fields[c]);
    events.push_back(std::move(ev));
  }
  return events;
}

std::vector<ImpressionEvent> parse_log_file(const std::string& path, const LogSchema& schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("cannot open input file: ", path);
  return parse_log(in, schema);
}

namespace {

std::string hour_to_yymmddhh(std::int64_t hour) {
  int y, m, d;
  civil_from_days(day_of_hour(hour), y, m, d);
  int hh = static_cast<int>(hour - day_start_hour(hour));
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%02d%02d%02d%02d", y % 100, m, d, hh);
  return buf;
}

}  // namespace

void write_log(std::ostream& out, const std::vector<ImpressionEvent>& events,
               const LogSchema& schema) {
  std::vector<std::string> row;
  row.push_back(schema.id_column);
  row.push_back(schema.label_column);
  row.push_back(schema.hour_column);
  for (const auto& c : schema.categorical_columns) row.push_back(c);
  write_csv_row(out, row);
  for (const auto& ev : events) {
    row.clear();
    row.push_back(num_str(ev.row_id));
    row.push_back(ev.click ? "1" : "0");
    row.push_back(hour_to_yymmddhh(ev.hour));
    if (ev.cats.size() != schema.categorical_columns.size())
      fail("event cats length ", ev.cats.size(), " does not match schema (",
           schema.categorical_columns.size(), " columns)");
    for (const auto& v : ev.cats) row.push_back(v);
    write_csv_row(out, row);
  }
}

bool sample_keeps(std::uint64_t row_id, int rate_percent) {
  if (rate_percent < 0 || rate_percent > 100)
    fail("sampling rate must be in [0,100], got ", rate_percent);
  return fnv1a64(num_str(row_id)) % 100 < static_cast<std::uint64_t>(rate_percent);
}

std::vector<ImpressionEvent> hash_sample(const std::vector<ImpressionEvent>& events,
                                         int rate_percent) {
  std::vector<ImpressionEvent> kept;
  for (const auto& ev : events) {
    if (sample_keeps(ev.row_id, rate_percent)) kept.push_back(ev);
  }
  return kept;
}

LogStats log_stats(const std::vector<ImpressionEvent>& events) {
  if (events.empty()) fail("log_stats on empty event sequence");
  LogStats stats;
  std::map<std::int64_t, DayStats> by_day;
  stats.first_hour = events.front().hour;
  stats.last_hour = events.front().hour;
  for (const auto& ev : events) {
    stats.first_hour = std::min(stats.first_hour, ev.hour);
    stats.last_hour = std::max(stats.last_hour, ev.hour);
    DayStats& d = by_day[day_of_hour(ev.hour)];
    d.day = day_of_hour(ev.hour);
    d.n_rows += 1;
    d.n_clicks += ev.click;
  }
  for (auto& [day, d] : by_day) {
    d.click_rate = d.n_rows > 0 ? static_cast<double>(d.n_clicks) / static_cast<double>(d.n_rows)
                                : 0.0;
    stats.days.push_back(d);
  }
  stats.last_day_partial = (stats.last_hour % 24) != 23;
  return stats;
}

void write_stats_csv(std::ostream& out, const LogStats& stats) {
  write_csv_row(out, {"day", "n_rows", "n_clicks", "click_rate"});
  for (const auto& d : stats.days) {
    write_csv_row(out, {format_day(d.day), num_str(d.n_rows), num_str(d.n_clicks),
                        num_str(d.click_rate)});
  }
}

}  // namespace chronofeat
