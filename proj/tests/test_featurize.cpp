#include <doctest.h>

#include <cmath>
#include <map>
#include <vector>

#include "chronofeat/common.hpp"
#include "chronofeat/featurize.hpp"
#include "chronofeat/te.hpp"
#include "oracle.hpp"
#include "testutil.hpp"

using namespace chronofeat;

namespace {

WindowSpec make_spec(WindowShape shape, std::vector<int> lengths, int event_n = 50) {
  WindowSpec s;
  s.shape = shape;
  if (shape != WindowShape::none) s.lengths = std::move(lengths);
  s.event_n = event_n;
  return s;
}

// Random toy log over a 21-column schema shaped like the reference layout.
std::vector<ImpressionEvent> avazu_toy_log(Rng& rng, int n_days) {
  std::vector<ImpressionEvent> events;
  std::uint64_t id = 1;
  for (int d = 0; d < n_days; ++d)
    for (int h = 0; h < 24; ++h) {
      const std::uint64_t n = 1 + rng.uniform_int(3);
      for (std::uint64_t r = 0; r < n; ++r) {
        std::vector<std::string> cats;
        for (int c = 0; c < 21; ++c)
          cats.push_back("v" + std::to_string(rng.uniform_int(3)));
        events.push_back(testutil::make_event(id++, (16364 + d) * 24 + h,
                                              rng.uniform01() < 0.3, std::move(cats)));
      }
    }
  return events;
}

void check_rows_against_oracle(const FeatureMatrix& m,
                               const std::vector<ImpressionEvent>& events,
                               const LogSchema& schema,
                               const std::vector<std::string>& entity_keys,
                               const WindowSpec& spec, bool te_on) {
  std::map<std::uint64_t, std::size_t> by_id;
  for (std::size_t i = 0; i < events.size(); ++i) by_id[events[i].row_id] = i;
  for (std::size_t r = 0; r < m.n_rows(); ++r) {
    const std::size_t ev_index = by_id.at(m.row_ids[r]);
    const auto expected =
        oracle::feature_row(events, schema, entity_keys, spec, te_on, ev_index);
    REQUIRE(expected.size() == m.n_cols());
    for (std::size_t c = 0; c < m.n_cols(); ++c) {
      REQUIRE(expected.count(m.column_names[c]) == 1);
      const float want = static_cast<float>(expected.at(m.column_names[c]));
      const float got = m.at(r, c);
      if (std::isnan(want))
        CHECK(std::isnan(got));
      else
        CHECK(got == want);
    }
  }
}

}  // namespace

TEST_SUITE("featurize") {
  TEST_CASE("expected_feature_count reproduces the 20 reference rows") {
    const std::vector<int> t3 = {1, 6, 24};
    const std::vector<int> t5a = {1, 3, 6, 12, 24};
    const std::vector<int> t5b = {1, 6, 24, 48, 168};
    const std::vector<int> t9 = {1, 2, 4, 8, 16, 24, 48, 96, 168};
    struct Row {
      std::vector<int> lengths;
      WindowShape shape;
      std::size_t count;
    };
    const std::vector<Row> table = {
        {t3, WindowShape::trailing, 72},   {t3, WindowShape::gap1, 72},
        {t3, WindowShape::bucket, 72},     {t3, WindowShape::calendar, 88},
        {t3, WindowShape::event50, 80},    {t5a, WindowShape::trailing, 88},
        {t5a, WindowShape::gap1, 88},      {t5a, WindowShape::bucket, 88},
        {t5a, WindowShape::calendar, 104}, {t5a, WindowShape::event50, 96},
        {t5b, WindowShape::trailing, 88},  {t5b, WindowShape::gap1, 88},
        {t5b, WindowShape::bucket, 88},    {t5b, WindowShape::calendar, 104},
        {t5b, WindowShape::event50, 96},   {t9, WindowShape::trailing, 120},
        {t9, WindowShape::gap1, 120},      {t9, WindowShape::bucket, 120},
        {t9, WindowShape::calendar, 136},  {t9, WindowShape::event50, 128},
    };
    for (const auto& row : table) {
      const WindowSpec spec = make_spec(row.shape, row.lengths);
      CHECK(expected_feature_count(spec, true, 21, 4) == row.count);
      // TE off drops the 21 x 2 encoding columns plus prior_ctr.
      CHECK(expected_feature_count(spec, false, 21, 4) == row.count - 43);
    }
    CHECK(expected_feature_count(make_spec(WindowShape::none, {}), true, 21, 4) == 44);
    CHECK(expected_feature_count(make_spec(WindowShape::none, {}), false, 21, 4) == 1);
  }

  TEST_CASE("actual column counts match the accounting on a reference-shaped log") {
    Rng rng(61);
    const auto events = avazu_toy_log(rng, 4);
    const LogSchema schema = LogSchema::avazu();
    const FoldAssignment fold = build_fold(events, 0);
    const FeatureMatrix te_cache = te_pass(events, schema);
    for (const auto& lengths : default_length_tuples()) {
      for (WindowShape shape : default_shapes()) {
        const WindowSpec spec = make_spec(shape, lengths);
        for (bool te_on : {true, false}) {
          const FeatureMatrix m = featurize_fold(events, schema, fold, spec, te_on,
                                                 te_on ? &te_cache : nullptr);
          CHECK(m.n_cols() == expected_feature_count(spec, te_on, 21, 4));
          CHECK(m.column_names ==
                feature_column_names(spec, te_on, schema, default_entity_keys()));
        }
      }
    }
  }

  TEST_CASE("every shape matches the per-row rescan oracle") {
    const LogSchema schema = testutil::toy_schema(3);
    const std::vector<std::string> keys = {"c0", "c2"};
    FeaturizeOptions options;
    options.entity_keys = keys;
    for (std::uint64_t seed : {71ULL, 72ULL}) {
      Rng rng(seed);
      const auto events = testutil::random_log(
          rng, {.n_days = 4, .max_rows_per_hour = 5, .n_cats = 3, .cardinality = 3});
      const FoldAssignment fold = build_fold(events, 0);
      const FeatureMatrix te_cache = te_pass(events, schema);
      for (WindowShape shape :
           {WindowShape::trailing, WindowShape::gap1, WindowShape::bucket,
            WindowShape::calendar, WindowShape::event50, WindowShape::none}) {
        WindowSpec spec = make_spec(shape, {1, 6, 24}, 5);
        for (bool te_on : {true, false}) {
          const FeatureMatrix m = featurize_fold(events, schema, fold, spec, te_on,
                                                 te_on ? &te_cache : nullptr, options);
          check_rows_against_oracle(m, events, schema, keys, spec, te_on);
        }
      }
    }
  }

  TEST_CASE("fold B rows stop at the fold's test day") {
    Rng rng(73);
    const auto events = testutil::random_log(rng, {.n_days = 5, .max_rows_per_hour = 4});
    const LogSchema schema = testutil::toy_schema(2);
    FeaturizeOptions options;
    options.entity_keys = {"c0"};
    const FoldAssignment fold = build_fold(events, 1);
    const FeatureMatrix m = featurize_fold(events, schema, fold,
                                           make_spec(WindowShape::trailing, {1, 6}), false,
                                           nullptr, options);
    std::size_t expected_rows = 0;
    for (const auto& ev : events)
      if (ev.hour < fold.test_hours.end) ++expected_rows;
    CHECK(m.n_rows() == expected_rows);
    for (std::size_t r = 0; r < m.n_rows(); ++r)
      CHECK(m.split_tags[r] != static_cast<std::uint8_t>(Split::excluded));
  }

  TEST_CASE("mutating test-day labels leaves train and val features untouched") {
    Rng rng(74);
    auto events = testutil::random_log(rng, {.n_days = 3, .max_rows_per_hour = 5});
    const LogSchema schema = testutil::toy_schema(2);
    FeaturizeOptions options;
    options.entity_keys = {"c0", "c1"};
    const FoldAssignment fold = build_fold(events, 0);
    const WindowSpec spec = make_spec(WindowShape::event50, {1, 6, 24}, 4);

    const FeatureMatrix te_before = te_pass(events, schema);
    const FeatureMatrix before =
        featurize_fold(events, schema, fold, spec, true, &te_before, options);

    auto poisoned = events;
    for (auto& ev : poisoned)
      if (fold.test_hours.contains(ev.hour)) ev.click = !ev.click;
    const FeatureMatrix te_after = te_pass(poisoned, schema);
    const FeatureMatrix after =
        featurize_fold(poisoned, schema, fold, spec, true, &te_after, options);

    REQUIRE(after.n_rows() == before.n_rows());
    REQUIRE(after.column_names == before.column_names);
    // Train and val rows precede the test day entirely, so every one of
    // their feature values must survive the mutation bit for bit. (Test
    // rows may legitimately shift: later test hours see earlier ones.)
    for (std::size_t r = 0; r < after.n_rows(); ++r) {
      if (after.split_tags[r] == static_cast<std::uint8_t>(Split::test)) continue;
      for (std::size_t c = 0; c < after.n_cols(); ++c) {
        if (std::isnan(before.at(r, c)))
          CHECK(std::isnan(after.at(r, c)));
        else
          CHECK(after.at(r, c) == before.at(r, c));
      }
    }
    // First-test-hour rows also cannot see their own hour's mutation.
    for (std::size_t r = 0; r < after.n_rows(); ++r) {
      if (after.split_tags[r] != static_cast<std::uint8_t>(Split::test)) continue;
      bool first_test_hour = false;
      for (const auto& ev : events)
        if (ev.row_id == after.row_ids[r]) first_test_hour = ev.hour == fold.test_hours.begin;
      if (!first_test_hour) continue;
      for (std::size_t c = 0; c < after.n_cols(); ++c) {
        if (std::isnan(before.at(r, c)))
          CHECK(std::isnan(after.at(r, c)));
        else
          CHECK(after.at(r, c) == before.at(r, c));
      }
    }
    // Only test-row labels differ.
    for (std::size_t r = 0; r < after.n_rows(); ++r) {
      if (after.split_tags[r] == static_cast<std::uint8_t>(Split::test))
        CHECK(after.labels[r] != before.labels[r]);
      else
        CHECK(after.labels[r] == before.labels[r]);
    }
  }

  TEST_CASE("featurize_fold error paths") {
    Rng rng(75);
    const auto events = testutil::random_log(rng, {.n_days = 3, .max_rows_per_hour = 3});
    const LogSchema schema = testutil::toy_schema(2);
    const FoldAssignment fold = build_fold(events, 0);
    FeaturizeOptions options;
    options.entity_keys = {"c0"};
    const WindowSpec spec = make_spec(WindowShape::trailing, {1, 6});

    // TE on requires a cache.
    CHECK_THROWS_AS(featurize_fold(events, schema, fold, spec, true, nullptr, options),
                    Error);
    // Cache missing a row.
    FeatureMatrix cache = te_pass(events, schema);
    cache.row_ids[0] += 999999;
    CHECK_THROWS_AS(featurize_fold(events, schema, fold, spec, true, &cache, options),
                    Error);
    // Unknown entity key.
    FeaturizeOptions bad_keys;
    bad_keys.entity_keys = {"mystery"};
    CHECK_THROWS_AS(featurize_fold(events, schema, fold, spec, false, nullptr, bad_keys),
                    Error);
    // Horizon cap.
    CHECK_THROWS_AS(featurize_fold(events, schema, fold,
                                   make_spec(WindowShape::trailing, {1, 500}), false,
                                   nullptr, options),
                    Error);
  }

  TEST_CASE("featurization is deterministic on disk") {
    testutil::TmpDir tmp;
    Rng rng(76);
    const auto events = testutil::random_log(rng, {.n_days = 3, .max_rows_per_hour = 4});
    const LogSchema schema = testutil::toy_schema(2);
    FeaturizeOptions options;
    options.entity_keys = {"c0", "c1"};
    const FoldAssignment fold = build_fold(events, 0);
    const WindowSpec spec = make_spec(WindowShape::calendar, {1, 24});
    const FeatureMatrix a =
        featurize_fold(events, schema, fold, spec, false, nullptr, options);
    const FeatureMatrix b =
        featurize_fold(events, schema, fold, spec, false, nullptr, options);
    write_matrix(a, tmp.file("a.fmx"));
    write_matrix(b, tmp.file("b.fmx"));
    CHECK(testutil::read_file(tmp.file("a.fmx")) == testutil::read_file(tmp.file("b.fmx")));
  }
}
