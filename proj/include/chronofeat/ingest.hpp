#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace chronofeat {

/// One log row: an impression with its label, hour index and categorical
/// field values in schema column order. Within-hour file order is part of
/// the data contract (the event-count window depends on it), so events are
/// never reordered after parsing.
struct ImpressionEvent {
  std::uint64_t row_id = 0;
  std::int64_t hour = 0;  // hours since 1970-01-01 00:00, log-native clock
  std::uint8_t click = 0;
  std::vector<std::string> cats;

  bool operator==(const ImpressionEvent&) const = default;
};

struct LogSchema {
  std::string id_column = "id";
  std::string label_column = "click";
  std::string hour_column = "hour";
  std::vector<std::string> categorical_columns;

  void validate() const;
  int categorical_index(const std::string& name) const;  // -1 when absent

  /// The Avazu layout: 21 categorical columns.
  static LogSchema avazu();
};

/// Builds a schema from a CSV header: id/click/hour columns by name, every
/// remaining column treated as categorical in header order.
LogSchema schema_from_header(const std::vector<std::string>& header);

LogSchema load_schema_json(const std::string& path);
void save_schema_json(const LogSchema& schema, const std::string& path);

/// Parses a delimited log. Rows come back in file order; errors carry the
/// offending line number.
std::vector<ImpressionEvent> parse_log(std::istream& in, const LogSchema& schema);
std::vector<ImpressionEvent> parse_log_file(const std::string& path, const LogSchema& schema);

void write_log(std::ostream& out, const std::vector<ImpressionEvent>& events,
               const LogSchema& schema);

/// Sampling membership: keep iff fnv1a64(decimal row_id) mod 100 < rate.
/// Deterministic, order independent, and nested across rates.
bool sample_keeps(std::uint64_t row_id, int rate_percent);

std::vector<ImpressionEvent> hash_sample(const std::vector<ImpressionEvent>& events,
                                         int rate_percent);

struct DayStats {
  std::int64_t day = 0;  // hour / 24
  std::int64_t n_rows = 0;
  std::int64_t n_clicks = 0;
  double click_rate = 0.0;
};

struct LogStats {
  std::vector<DayStats> days;  // ascending by day
  std::int64_t first_hour = 0;
  std::int64_t last_hour = 0;
  bool last_day_partial = false;  // last observed hour is not hour 23 of its day
};

LogStats log_stats(const std::vector<ImpressionEvent>& events);

void write_stats_csv(std::ostream& out, const LogStats& stats);

}  // namespace chronofeat
