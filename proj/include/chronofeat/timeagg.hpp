#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "chronofeat/ingest.hpp"

namespace chronofeat {

inline constexpr int kDefaultHorizonCap = 168;
inline constexpr int kDefaultEventN = 50;
inline constexpr int kDefaultGapHours = 1;

inline const std::vector<std::string>& default_entity_keys() {
  static const std::vector<std::string> keys{"device_ip", "device_id", "app_id", "site_id"};
  return keys;
}

enum class WindowShape { trailing, gap1, bucket, calendar, event50, none };

const char* window_shape_name(WindowShape s);
WindowShape parse_window_shape(const std::string& name);

/// A window design point: a length tuple plus a shape tag. The `none` shape
/// is the target-encoding-only baseline (no history windows at all).
struct WindowSpec {
  std::vector<int> lengths;  // strictly ascending positive hours
  WindowShape shape = WindowShape::trailing;
  int gap_hours = kDefaultGapHours;  // used by gap1
  int event_n = kDefaultEventN;      // used by event50

  void validate(int horizon_cap = kDefaultHorizonCap) const;

  /// Longest lookback any window of this spec can reach.
  int required_span_hours() const;

  /// "trailing:1,6,24" style tag used in reports and paths.
  std::string label() const;

  bool operator==(const WindowSpec&) const = default;
};

WindowSpec parse_window_spec(const std::string& text);  // "shape:l1,l2,..."

struct Counts {
  std::int64_t imps = 0;
  std::int64_t clicks = 0;

  bool operator==(const Counts&) const = default;
};

struct CalendarCounts {
  Counts cur_day;   // [day_start(H), H)
  Counts prev_day;  // [day_start(H)-24, day_start(H))
  bool prev_day_available = false;
};

struct SmoothedRateParams {
  double alpha = 1.0;
  double beta = 10.0;
};

/// (C + alpha) / (I + alpha + beta); rejects C > I as a state-corruption
/// signal.
double smoothed_rate(std::int64_t imps, std::int64_t clicks,
                     const SmoothedRateParams& params = {});

/// Fixed-capacity ring of click outcomes, one bit each, in stream order.
class ClickRing {
 public:
  void init(int capacity);
  void push(bool click);
  std::int64_t size() const { return size_; }
  std::int64_t ones() const { return ones_; }

 private:
  std::vector<std::uint64_t> words_;
  int capacity_ = 0;
  int head_ = 0;
  std::int64_t size_ = 0;
  std::int64_t ones_ = 0;

  bool test(int slot) const;
  void set(int slot, bool v);
};

/// History of one entity column: per-value hour buckets within the horizon,
/// an event ring, and the last-seen hour. All queries assume state reflects
/// exactly hours < H (per-hour batching); updates happen only through
/// WindowEngine::advance_hour.
class EntityHistory {
 public:
  EntityHistory(int horizon_hours, int event_n)
      : horizon_(horizon_hours), event_n_(event_n) {}

  /// Counts over [H-L, H).
  Counts trailing(const std::string& value, int length_hours, std::int64_t hour) const;

  /// Counts over [H-(L+g), H-g), computed as trailing(L+g) - trailing(g).
  Counts gap(const std::string& value, int length_hours, int gap_hours,
             std::int64_t hour) const;

  /// Disjoint buckets [H-e_j, H-e_{j-1}) with e_0 = 0, as trailing
  /// differences; they telescope to trailing(e_K).
  std::vector<Counts> buckets(const std::string& value, const std::vector<int>& edges,
                              std::int64_t hour) const;

  /// Current day to date plus, when the log covers it, the full previous
  /// day. `first_hour` is the first hour of the log feeding this engine.
  CalendarCounts calendar(const std::string& value, std::int64_t hour,
                          std::int64_t first_hour) const;

  /// The last min(N, available) impressions strictly before the current
  /// processing hour, in stream order.
  Counts event_window(const std::string& value) const;

  /// Hours since the value was last observed; nullopt for unseen values.
  std::optional<std::int64_t> recency(const std::string& value, std::int64_t hour) const;

  void add(const std::string& value, std::int64_t hour, bool click);

  /// Impressions in hour buckets for one value visible to a query at `hour`,
  /// i.e. within [hour - horizon, hour) (tests recount this against the raw
  /// log).
  std::int64_t retained_bucket_imps(const std::string& value, std::int64_t hour) const;

 private:
  struct HourBucket {
    std::int64_t hour;
    std::int32_t imps;
    std::int32_t clicks;
  };
  struct ValueState {
    std::deque<HourBucket> buckets;  // strictly ascending hours
    ClickRing ring;
    std::int64_t last_seen_hour = -1;
  };
  std::unordered_map<std::string, ValueState> values_;
  int horizon_;
  int event_n_;

  Counts counts_in(const ValueState& vs, std::int64_t begin, std::int64_t end) const;
};

/// Streaming engine for one (fold, WindowSpec) pass. Hours are ingested
/// strictly in ascending order; feature queries for rows at hour h must
/// happen before hour h is ingested.
class WindowEngine {
 public:
  WindowEngine(const WindowSpec& spec, std::vector<int> entity_cat_indices,
               SmoothedRateParams rate_params = {});

  /// Folds all rows of hour `h` into state. `h` must exceed the last
  /// ingested hour; an empty row set just moves the cursor.
  void advance_hour(std::int64_t h, const ImpressionEvent* rows, std::size_t n_rows);

  const EntityHistory& history(std::size_t key) const { return histories_[key]; }
  std::size_t n_keys() const { return histories_.size(); }
  const WindowSpec& spec() const { return spec_; }
  const SmoothedRateParams& rate_params() const { return rate_params_; }
  std::int64_t first_hour() const { return first_hour_; }  // -1 before any ingest
  std::int64_t current_hour() const { return current_hour_; }
  int horizon_hours() const { return horizon_; }

 private:
  WindowSpec spec_;
  std::vector<int> key_indices_;
  std::vector<EntityHistory> histories_;
  SmoothedRateParams rate_params_;
  int horizon_;
  std::int64_t current_hour_ = -1;
  std::int64_t first_hour_ = -1;
};

}  // namespace chronofeat
