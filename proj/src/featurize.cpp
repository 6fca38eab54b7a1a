#include "chronofeat/featurize.hpp"

#include <cmath>
#include <limits>
#include <unordered_map>

#include "chronofeat/common.hpp"

namespace chronofeat {

const std::vector<std::vector<int>>& default_length_tuples() {
  static const std::vector<std::vector<int>> tuples{
      {1, 6, 24},
      {1, 3, 6, 12, 24},
      {1, 6, 24, 48, 168},
      {1, 2, 4, 8, 16, 24, 48, 96, 168}};
  return tuples;
}

const std::vector<WindowShape>& default_shapes() {
  static const std::vector<WindowShape> shapes{WindowShape::trailing, WindowShape::gap1,
                                               WindowShape::bucket, WindowShape::calendar,
                                               WindowShape::event50};
  return shapes;
}

namespace {

std::string window_tag(int hours) { return num_str(static_cast<std::int64_t>(hours)) + "h"; }

void append_key_columns(std::vector<std::string>& names, const std::string& key,
                        const WindowSpec& spec) {
  auto push_pair = [&](const std::string& stem) {
    names.push_back(key + "__" + stem + "__limps");
    names.push_back(key + "__" + stem + "__rate");
  };
  switch (spec.shape) {
    case WindowShape::none:
      return;
    case WindowShape::gap1:
      for (int l : spec.lengths) push_pair(cat("gap1__", window_tag(l)));
      break;
    case WindowShape::bucket: {
      int inner = 0;
      for (int l : spec.lengths) {
        push_pair(cat("bucket__", inner, "_", l, "h"));
        inner = l;
      }
      break;
    }
    case WindowShape::trailing:
    case WindowShape::calendar:
    case WindowShape::event50:
      for (int l : spec.lengths) push_pair(cat("trailing__", window_tag(l)));
      break;
  }
  if (spec.shape == WindowShape::calendar) {
    push_pair("calendar__cur_day");
    push_pair("calendar__prev_day");
  }
  if (spec.shape == WindowShape::event50) {
    push_pair(cat("event", spec.event_n));
  }
  names.push_back(key + "__recency_h");
}

}  // namespace

std::vector<std::string> feature_column_names(const WindowSpec& spec, bool te_on,
                                              const LogSchema& schema,
                                              const std::vector<std::string>& entity_keys) {
  std::vector<std::string> names;
  names.push_back("hour_of_day");
  if (te_on) names.push_back("prior_ctr");
  if (te_on) {
    for (const auto& c : schema.categorical_columns) {
      names.push_back(c + "__te");
      names.push_back(c + "__hist_imps");
    }
  }
  if (spec.shape != WindowShape::none) {
    for (const auto& key : entity_keys) append_key_columns(names, key, spec);
  }
  return names;
}

std::size_t expected_feature_count(const WindowSpec& spec, bool te_on,
                                   std::size_t n_cat_columns, std::size_t n_entity_keys) {
  std::size_t count = te_on ? 2 : 1;  // hour_of_day (+ prior_ctr with TE)
  if (te_on) count += 2 * n_cat_columns;
  if (spec.shape == WindowShape::none) return count;
  count += 2 * n_entity_keys * spec.lengths.size();
  count += n_entity_keys;  // recency
  if (spec.shape == WindowShape::calendar) count += 4 * n_entity_keys;
  if (spec.shape == WindowShape::event50) count += 2 * n_entity_keys;
  return count;
}

FeatureMatrix featurize_fold(const std::vector<ImpressionEvent>& events,
                             const LogSchema& schema, const FoldAssignment& fold,
                             const WindowSpec& spec, bool te_on,
                             const FeatureMatrix* te_cache, const FeaturizeOptions& options) {
  spec.validate(options.horizon_cap);
  schema.validate();
  const float kNan = std::numeric_limits<float>::quiet_NaN();

  const bool with_windows = spec.shape != WindowShape::none;

  // Resolve entity keys against the schema.
  std::vector<int> key_indices;
  if (with_windows) {
    for (const auto& key : options.entity_keys) {
      int idx = schema.categorical_index(key);
      if (idx < 0) fail("entity key '", key, "' is not a schema categorical column");
      key_indices.push_back(idx);
    }
  }

  // TE cache lookups: row_id -> cache row, plus the column positions the
  // assembled matrix reads.
  std::unordered_map<std::uint64_t, std::size_t> cache_rows;
  std::vector<int> cache_cols;  // prior_ctr, then per cat column te/hist
  if (te_on) {
    if (te_cache == nullptr) fail("te cache required when target encoding is on");
    cache_rows.reserve(te_cache->n_rows());
    for (std::size_t r = 0; r < te_cache->n_rows(); ++r)
      cache_rows.emplace(te_cache->row_ids[r], r);
    auto need = [&](const std::string& name) {
      int idx = te_cache->column_index(name);
      if (idx < 0) fail("te cache lacks column '", name, "'");
      return idx;
    };
    cache_cols.push_back(need("prior_ctr"));
    for (const auto& c : schema.categorical_columns) {
      cache_cols.push_back(need(c + "__te"));
      cache_cols.push_back(need(c + "__hist_imps"));
    }
  }

  FeatureMatrix m;
  m.column_names = feature_column_names(spec, te_on, schema, options.entity_keys);
  const std::size_t n_cols = m.column_names.size();
  if (n_cols != expected_feature_count(spec, te_on, schema.categorical_columns.size(),
                                       options.entity_keys.size()))
    fail("internal: column layout disagrees with expected_feature_count");

  WindowEngine engine(spec, key_indices, options.rate_params);
  const std::int64_t end_hour = fold.test_hours.end;

  std::size_t i = 0;
  std::int64_t prev_hour = std::numeric_limits<std::int64_t>::min();
  while (i < events.size()) {
    const std::int64_t hour = events[i].hour;
    if (hour < prev_hour)
      fail("events not sorted by hour: hour ", hour, " after ", prev_hour);
    prev_hour = hour;
    if (hour >= end_hour) break;  // nothing past the test day is featurized
    std::size_t end = i;
    while (end < events.size() && events[end].hour == hour) ++end;

    for (std::size_t r = i; r < end; ++r) {
      const ImpressionEvent& ev = events[r];
      const Split split = assign_split(ev, fold);
      if (split == Split::excluded) continue;
      m.row_ids.push_back(ev.row_id);
      m.labels.push_back(ev.click);
      m.split_tags.push_back(static_cast<std::uint8_t>(split));

      m.values.push_back(static_cast<float>(ev.hour % 24));
      if (te_on) {
        auto it = cache_rows.find(ev.row_id);
        if (it == cache_rows.end())
          fail("te cache has no row for row_id ", ev.row_id);
        for (int col : cache_cols)
          m.values.push_back(te_cache->at(it->second, static_cast<std::size_t>(col)));
      }
      if (!with_windows) continue;

      for (std::size_t k = 0; k < key_indices.size(); ++k) {
        const EntityHistory& hist = engine.history(k);
        const std::string& value = ev.cats[static_cast<std::size_t>(key_indices[k])];
        auto push_counts = [&](Counts c) {
          m.values.push_back(static_cast<float>(std::log1p(static_cast<double>(c.imps))));
          m.values.push_back(
              static_cast<float>(smoothed_rate(c.imps, c.clicks, options.rate_params)));
        };
        switch (spec.shape) {
          case WindowShape::gap1:
            for (int l : spec.lengths) push_counts(hist.gap(value, l, spec.gap_hours, hour));
            break;
          case WindowShape::bucket:
            for (Counts c : hist.buckets(value, spec.lengths, hour)) push_counts(c);
            break;
          default:
            for (int l : spec.lengths) push_counts(hist.trailing(value, l, hour));
            break;
        }
        if (spec.shape == WindowShape::calendar) {
          CalendarCounts cc = hist.calendar(value, hour, engine.first_hour());
          push_counts(cc.cur_day);
          if (cc.prev_day_available) {
            push_counts(cc.prev_day);
          } else {
            m.values.push_back(kNan);
            m.values.push_back(kNan);
          }
        }
        if (spec.shape == WindowShape::event50) {
          push_counts(hist.event_window(value));
        }
        auto rec = hist.recency(value, hour);
        m.values.push_back(rec ? static_cast<float>(*rec) : kNan);
      }
    }
    if (with_windows) engine.advance_hour(hour, &events[i], end - i);
    i = end;
  }
  m.validate();
  return m;
}

}  // namespace chronofeat
