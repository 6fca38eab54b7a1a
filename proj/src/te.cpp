#include "chronofeat/te.hpp"

#include <cmath>

#include "chronofeat/common.hpp"

namespace chronofeat {

void PriorState::add(std::int64_t imps, std::int64_t clicks) {
  if (imps < 0 || clicks < 0 || clicks > imps)
    fail("prior state update with clicks=", clicks, " imps=", imps);
  imps_ += imps;
  clicks_ += clicks;
}

TargetEncoder::TargetEncoder(std::size_t n_columns, double smoothing_m)
    : columns_(n_columns), m_(smoothing_m) {}

double TargetEncoder::te_value(std::size_t column, const std::string& value,
                               double prior) const {
  const auto& col = columns_[column];
  auto it = col.find(value);
  if (it == col.end()) return prior;
  const auto& vc = it->second;
  return (static_cast<double>(vc.clicks) + m_ * prior) / (static_cast<double>(vc.imps) + m_);
}

double TargetEncoder::hist_imps(std::size_t column, const std::string& value) const {
  const auto& col = columns_[column];
  auto it = col.find(value);
  if (it == col.end()) return 0.0;
  return std::log1p(static_cast<double>(it->second.imps));
}

void TargetEncoder::add(std::size_t column, const std::string& value, bool click) {
  auto& vc = columns_[column][value];
  vc.imps += 1;
  vc.clicks += click ? 1 : 0;
}

FeatureMatrix te_pass(const std::vector<ImpressionEvent>& events, const LogSchema& schema,
                      const TeParams& params) {
  const std::size_t n_cat = schema.categorical_columns.size();
  FeatureMatrix m;
  m.column_names.reserve(2 + 2 * n_cat);
  m.column_names.push_back("prior_ctr");
  m.column_names.push_back("hour_of_day");
  for (const auto& c : schema.categorical_columns) {
    m.column_names.push_back(c + "__te");
    m.column_names.push_back(c + "__hist_imps");
  }
  const std::size_t n_cols = m.column_names.size();
  m.row_ids.reserve(events.size());
  m.labels.reserve(events.size());
  m.split_tags.reserve(events.size());
  m.values.reserve(events.size() * n_cols);

  PriorState prior_state(params.prior_a, params.prior_b);
  TargetEncoder encoder(n_cat, params.smoothing_m);

  std::size_t i = 0;
  std::int64_t prev_hour = -1;
  while (i < events.size()) {
    const std::int64_t hour = events[i].hour;
    if (hour < prev_hour)
      fail("events not sorted by hour: hour ", hour, " after ", prev_hour);
    prev_hour = hour;
    std::size_t end = i;
    while (end < events.size() && events[end].hour == hour) ++end;
    if (end < events.size() && events[end].hour < hour)
      fail("events not sorted by hour: hour ", events[end].hour, " after ", hour);

    const double prior = prior_state.value();
    for (std::size_t r = i; r < end; ++r) {
      const ImpressionEvent& ev = events[r];
      if (ev.cats.size() != n_cat)
        fail("event cats length ", ev.cats.size(), " does not match schema (", n_cat, ")");
      m.row_ids.push_back(ev.row_id);
      m.labels.push_back(ev.click);
      m.split_tags.push_back(static_cast<std::uint8_t>(Split::excluded));
      m.values.push_back(static_cast<float>(prior));
      m.values.push_back(static_cast<float>(hour % 24));
      for (std::size_t c = 0; c < n_cat; ++c) {
        m.values.push_back(static_cast<float>(encoder.te_value(c, ev.cats[c], prior)));
        m.values.push_back(static_cast<float>(encoder.hist_imps(c, ev.cats[c])));
      }
    }
    // Hour h is complete; only now does its label feedback enter state.
    std::int64_t hour_imps = 0, hour_clicks = 0;
    for (std::size_t r = i; r < end; ++r) {
      const ImpressionEvent& ev = events[r];
      hour_imps += 1;
      hour_clicks += ev.click;
      for (std::size_t c = 0; c < n_cat; ++c) encoder.add(c, ev.cats[c], ev.click != 0);
    }
    prior_state.add(hour_imps, hour_clicks);
    i = end;
  }
  m.validate();
  return m;
}

}  // namespace chronofeat
