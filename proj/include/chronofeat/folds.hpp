#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "chronofeat/ingest.hpp"

namespace chronofeat {

enum class Split : std::uint8_t { train = 0, val = 1, test = 2, excluded = 3 };

const char* split_name(Split s);

/// Half-open hour-index interval [begin, end).
struct HourInterval {
  std::int64_t begin = 0;
  std::int64_t end = 0;

  bool contains(std::int64_t hour) const { return hour >= begin && hour < end; }
  bool operator==(const HourInterval&) const = default;
};

struct SplitStats {
  std::int64_t start_hour = 0;  // first hour of the interval
  std::int64_t end_hour = 0;    // last hour of the interval (inclusive)
  std::int64_t n_rows = 0;
  std::int64_t n_clicks = 0;
  double click_rate = 0.0;
};

/// A rolling-tail out-of-time fold: test = day D-k, val = day D-k-1,
/// train = all earlier days, where D is the last day in the data.
struct FoldAssignment {
  std::string fold_id;
  int offset_k = 0;
  HourInterval train_hours, val_hours, test_hours;
  SplitStats train_stats, val_stats, test_stats;
  bool last_day_partial = false;  // D has no row in its hour 23
};

std::string fold_label(int offset_k);
/// Accepts "A,B" style labels or integer offsets ("0,1").
std::vector<int> parse_fold_list(const std::string& text);

FoldAssignment build_fold(const std::vector<ImpressionEvent>& events, int offset_k);

Split assign_split(const ImpressionEvent& event, const FoldAssignment& fold);

/// Report rows mirror the split table layout: sample, fold_id, split,
/// start_hour, end_hour, n_rows, click_rate.
void write_splits_report(std::ostream& out, const std::vector<FoldAssignment>& folds,
                         const std::string& sample_label);

}  // namespace chronofeat
