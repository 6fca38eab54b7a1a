#include "chronofeat/folds.hpp"

#include <algorithm>
#include <ostream>

#include "chronofeat/common.hpp"
#include "chronofeat/csv.hpp"

namespace chronofeat {

const char* split_name(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
    case Split::excluded: return "excluded";
  }
  return "?";
}

std::string fold_label(int offset_k) {
  if (offset_k >= 0 && offset_k < 26) return std::string(1, static_cast<char>('A' + offset_k));
  return cat("fold", offset_k);
}

std::vector<int> parse_fold_list(const std::string& text) {
  std::vector<int> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t comma = text.find(',', pos);
    std::string tok = text.substr(pos, comma == std::string::npos ? comma : comma - pos);
    if (tok.empty()) fail("empty fold token in '", text, "'");
    if (tok.size() == 1 && tok[0] >= 'A' && tok[0] <= 'Z') {
      out.push_back(tok[0] - 'A');
    } else {
      out.push_back(static_cast<int>(parse_int64(tok, "fold offset")));
      if (out.back() < 0) fail("fold offset must be non-negative, got ", tok);
    }
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  if (out.empty()) fail("no folds given");
  return out;
}

namespace {

SplitStats interval_stats(const std::vector<ImpressionEvent>& events, HourInterval iv) {
  SplitStats s;
  s.start_hour = iv.begin;
  s.end_hour = iv.end - 1;
  for (const auto& ev : events) {
    if (iv.contains(ev.hour)) {
      s.n_rows += 1;
      s.n_clicks += ev.click;
    }
  }
  s.click_rate = s.n_rows > 0 ? static_cast<double>(s.n_clicks) / static_cast<double>(s.n_rows)
                              : 0.0;
  return s;
}

}  // namespace

FoldAssignment build_fold(const std::vector<ImpressionEvent>& events, int offset_k) {
  if (offset_k < 0) fail("fold offset must be non-negative, got ", offset_k);
  if (events.empty()) fail("cannot build folds from an empty log");
  std::int64_t min_hour = events.front().hour;
  std::int64_t max_hour = events.front().hour;
  for (const auto& ev : events) {
    min_hour = std::min(min_hour, ev.hour);
    max_hour = std::max(max_hour, ev.hour);
  }
  const std::int64_t first_day = day_of_hour(min_hour);
  const std::int64_t last_day = day_of_hour(max_hour);
  const std::int64_t available_days = last_day - first_day + 1;
  const std::int64_t required_days = offset_k + 3;
  if (available_days < required_days)
    fail("fold k=", offset_k, " needs ", required_days, " days of data, only ",
         available_days, " available");

  const std::int64_t test_day = last_day - offset_k;
  FoldAssignment fold;
  fold.fold_id = fold_label(offset_k);
  fold.offset_k = offset_k;
  fold.train_hours = {first_day * 24, (test_day - 1) * 24};
  fold.val_hours = {(test_day - 1) * 24, test_day * 24};
  fold.test_hours = {test_day * 24, (test_day + 1) * 24};
  fold.train_stats = interval_stats(events, fold.train_hours);
  fold.val_stats = interval_stats(events, fold.val_hours);
  fold.test_stats = interval_stats(events, fold.test_hours);
  fold.last_day_partial = (max_hour % 24) != 23;
  return fold;
}

Split assign_split(const ImpressionEvent& event, const FoldAssignment& fold) {
  if (fold.train_hours.contains(event.hour)) return Split::train;
  if (fold.val_hours.contains(event.hour)) return Split::val;
  if (fold.test_hours.contains(event.hour)) return Split::test;
  return Split::excluded;
}

void write_splits_report(std::ostream& out, const std::vector<FoldAssignment>& folds,
                         const std::string& sample_label) {
  write_csv_row(out, {"sample", "fold_id", "split", "start_hour", "end_hour", "n_rows",
                      "click_rate"});
  struct Row {
    std::string fold_id, split;
    const SplitStats* stats;
  };
  std::vector<Row> rows;
  for (const auto& fold : folds) {
    rows.push_back({fold.fold_id, "test", &fold.test_stats});
    rows.push_back({fold.fold_id, "train", &fold.train_stats});
    rows.push_back({fold.fold_id, "val", &fold.val_stats});
  }
  std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
    return std::tie(a.fold_id, a.split) < std::tie(b.fold_id, b.split);
  });
  for (const auto& r : rows) {
    write_csv_row(out, {sample_label, r.fold_id, r.split, format_hour(r.stats->start_hour),
                        format_hour(r.stats->end_hour), num_str(r.stats->n_rows),
                        num_str(r.stats->click_rate)});
  }
}

}  // namespace chronofeat
