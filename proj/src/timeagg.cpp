#include "chronofeat/timeagg.hpp"

#include <algorithm>

#include "chronofeat/common.hpp"

namespace chronofeat {

const char* window_shape_name(WindowShape s) {
  switch (s) {
    case WindowShape::trailing: return "trailing";
    case WindowShape::gap1: return "gap1";
    case WindowShape::bucket: return "bucket";
    case WindowShape::calendar: return "calendar";
    case WindowShape::event50: return "event50";
    case WindowShape::none: return "none";
  }
  return "?";
}

WindowShape parse_window_shape(const std::string& name) {
  for (WindowShape s : {WindowShape::trailing, WindowShape::gap1, WindowShape::bucket,
                        WindowShape::calendar, WindowShape::event50, WindowShape::none}) {
    if (name == window_shape_name(s)) return s;
  }
  fail("unknown window shape '", name,
       "' (expected trailing|gap1|bucket|calendar|event50|none)");
}

void WindowSpec::validate(int horizon_cap) const {
  if (shape == WindowShape::none) {
    if (!lengths.empty()) fail("shape 'none' takes no window lengths");
    return;
  }
  if (lengths.empty()) fail("window spec needs at least one length");
  int prev = 0;
  for (int l : lengths) {
    if (l <= prev) fail("window lengths must be strictly ascending positive hours");
    prev = l;
  }
  if (lengths.back() > horizon_cap)
    fail("window length ", lengths.back(), "h exceeds the horizon cap of ", horizon_cap, "h");
  if (gap_hours <= 0) fail("gap_hours must be positive");
  if (event_n <= 0) fail("event_n must be positive");
}

int WindowSpec::required_span_hours() const {
  if (shape == WindowShape::none || lengths.empty()) return 0;
  int span = lengths.back();
  if (shape == WindowShape::gap1) span += gap_hours;
  if (shape == WindowShape::calendar) span = std::max(span, 48);
  return span;
}

std::string WindowSpec::label() const {
  std::string s = window_shape_name(shape);
  if (shape == WindowShape::none) return s;
  s += ":";
  for (std::size_t i = 0; i < lengths.size(); ++i) {
    if (i) s += ",";
    s += num_str(static_cast<std::int64_t>(lengths[i]));
  }
  return s;
}

WindowSpec parse_window_spec(const std::string& text) {
  WindowSpec spec;
  auto colon = text.find(':');
  spec.shape = parse_window_shape(text.substr(0, colon));
  if (colon != std::string::npos) {
    std::size_t pos = colon + 1;
    while (pos <= text.size()) {
      auto comma = text.find(',', pos);
      std::string tok = text.substr(pos, comma == std::string::npos ? comma : comma - pos);
      spec.lengths.push_back(static_cast<int>(parse_int64(tok, "window length")));
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
  }
  spec.validate();
  return spec;
}

double smoothed_rate(std::int64_t imps, std::int64_t clicks, const SmoothedRateParams& p) {
  if (clicks < 0 || clicks > imps)
    fail("smoothed_rate with clicks=", clicks, " imps=", imps, " (state corruption)");
  return (static_cast<double>(clicks) + p.alpha) /
         (static_cast<double>(imps) + p.alpha + p.beta);
}

// ---------------------------------------------------------------------------
// ClickRing

void ClickRing::init(int capacity) {
  capacity_ = capacity;
  words_.assign((static_cast<std::size_t>(capacity) + 63) / 64, 0);
  head_ = 0;
  size_ = 0;
  ones_ = 0;
}

bool ClickRing::test(int slot) const {
  return (words_[static_cast<std::size_t>(slot) / 64] >> (slot % 64)) & 1u;
}

void ClickRing::set(int slot, bool v) {
  const std::uint64_t mask = 1ULL << (slot % 64);
  if (v) words_[static_cast<std::size_t>(slot) / 64] |= mask;
  else words_[static_cast<std::size_t>(slot) / 64] &= ~mask;
}

void ClickRing::push(bool click) {
  if (size_ < capacity_) {
    set((head_ + static_cast<int>(size_)) % capacity_, click);
    ++size_;
    ones_ += click ? 1 : 0;
  } else {
    ones_ -= test(head_) ? 1 : 0;
    set(head_, click);
    ones_ += click ? 1 : 0;
    head_ = (head_ + 1) % capacity_;
  }
}

// ---------------------------------------------------------------------------
// EntityHistory

Counts EntityHistory::counts_in(const ValueState& vs, std::int64_t begin,
                                std::int64_t end) const {
  Counts c;
  for (auto it = vs.buckets.rbegin(); it != vs.buckets.rend(); ++it) {
    if (it->hour >= end) continue;
    if (it->hour < begin) break;
    c.imps += it->imps;
    c.clicks += it->clicks;
  }
  return c;
}

Counts EntityHistory::trailing(const std::string& value, int length_hours,
                               std::int64_t hour) const {
  auto it = values_.find(value);
  if (it == values_.end()) return {};
  return counts_in(it->second, hour - length_hours, hour);
}

Counts EntityHistory::gap(const std::string& value, int length_hours, int gap_hours,
                          std::int64_t hour) const {
  Counts wide = trailing(value, length_hours + gap_hours, hour);
  Counts recent = trailing(value, gap_hours, hour);
  return {wide.imps - recent.imps, wide.clicks - recent.clicks};
}

std::vector<Counts> EntityHistory::buckets(const std::string& value,
                                           const std::vector<int>& edges,
                                           std::int64_t hour) const {
  std::vector<Counts> out;
  out.reserve(edges.size());
  Counts inner{};  // trailing(e_{j-1})
  for (int edge : edges) {
    Counts outer = trailing(value, edge, hour);
    out.push_back({outer.imps - inner.imps, outer.clicks - inner.clicks});
    inner = outer;
  }
  return out;
}

CalendarCounts EntityHistory::calendar(const std::string& value, std::int64_t hour,
                                       std::int64_t first_hour) const {
  CalendarCounts cc;
  const std::int64_t day_start = day_start_hour(hour);
  cc.prev_day_available = first_hour >= 0 && first_hour <= day_start - 24;
  auto it = values_.find(value);
  if (it == values_.end()) return cc;
  cc.cur_day = counts_in(it->second, day_start, hour);
  if (cc.prev_day_available) cc.prev_day = counts_in(it->second, day_start - 24, day_start);
  return cc;
}

Counts EntityHistory::event_window(const std::string& value) const {
  auto it = values_.find(value);
  if (it == values_.end()) return {};
  return {it->second.ring.size(), it->second.ring.ones()};
}

std::optional<std::int64_t> EntityHistory::recency(const std::string& value,
                                                   std::int64_t hour) const {
  auto it = values_.find(value);
  if (it == values_.end() || it->second.last_seen_hour < 0) return std::nullopt;
  return hour - it->second.last_seen_hour;
}

void EntityHistory::add(const std::string& value, std::int64_t hour, bool click) {
  auto [it, inserted] = values_.try_emplace(value);
  ValueState& vs = it->second;
  if (inserted) vs.ring.init(event_n_);
  if (vs.buckets.empty() || vs.buckets.back().hour != hour) {
    vs.buckets.push_back({hour, 0, 0});
    // Buckets below hour+1-horizon are out of reach of every later query.
    const std::int64_t cutoff = hour + 1 - horizon_;
    while (!vs.buckets.empty() && vs.buckets.front().hour < cutoff) vs.buckets.pop_front();
  }
  vs.buckets.back().imps += 1;
  vs.buckets.back().clicks += click ? 1 : 0;
  vs.ring.push(click);
  vs.last_seen_hour = hour;
}

std::int64_t EntityHistory::retained_bucket_imps(const std::string& value,
                                                 std::int64_t hour) const {
  auto it = values_.find(value);
  if (it == values_.end()) return 0;
  return counts_in(it->second, hour - horizon_, hour).imps;
}

// ---------------------------------------------------------------------------
// WindowEngine

WindowEngine::WindowEngine(const WindowSpec& spec, std::vector<int> entity_cat_indices,
                           SmoothedRateParams rate_params)
    : spec_(spec), key_indices_(std::move(entity_cat_indices)), rate_params_(rate_params) {
  horizon_ = std::max(kDefaultHorizonCap, spec_.required_span_hours());
  histories_.reserve(key_indices_.size());
  for (std::size_t i = 0; i < key_indices_.size(); ++i)
    histories_.emplace_back(horizon_, spec_.event_n);
}

void WindowEngine::advance_hour(std::int64_t h, const ImpressionEvent* rows,
                                std::size_t n_rows) {
  if (h <= current_hour_)
    fail("advance_hour out of order: hour ", h, " after ", current_hour_);
  if (first_hour_ < 0 && n_rows > 0) first_hour_ = h;
  for (std::size_t r = 0; r < n_rows; ++r) {
    const ImpressionEvent& ev = rows[r];
    if (ev.hour != h) fail("advance_hour(", h, ") got a row at hour ", ev.hour);
    for (std::size_t k = 0; k < key_indices_.size(); ++k) {
      const int idx = key_indices_[k];
      if (idx < 0 || static_cast<std::size_t>(idx) >= ev.cats.size())
        fail("entity key index ", idx, " out of range for event cats");
      histories_[k].add(ev.cats[static_cast<std::size_t>(idx)], h, ev.click != 0);
    }
  }
  current_hour_ = h;
}

}  // namespace chronofeat
