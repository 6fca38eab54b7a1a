#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "chronofeat/common.hpp"
#include "chronofeat/te.hpp"
#include "oracle.hpp"
#include "testutil.hpp"

using namespace chronofeat;

namespace {

// Feature row `r` of a te_pass matrix as a name->double map for comparison
// against the oracle.
std::map<std::string, double> row_map(const FeatureMatrix& m, std::size_t r) {
  std::map<std::string, double> out;
  for (std::size_t c = 0; c < m.n_cols(); ++c)
    out[m.column_names[c]] = static_cast<double>(m.at(r, c));
  return out;
}

void check_against_oracle(const std::vector<ImpressionEvent>& events,
                          const LogSchema& schema) {
  const FeatureMatrix m = te_pass(events, schema);
  REQUIRE(m.n_rows() == events.size());
  for (std::size_t r = 0; r < events.size(); ++r) {
    CHECK(m.row_ids[r] == events[r].row_id);
    const auto expected = oracle::te_row(events, schema, r);
    const auto got = row_map(m, r);
    REQUIRE(got.size() == expected.size());
    for (const auto& [name, value] : expected) {
      REQUIRE(got.count(name) == 1);
      // Float32 storage is the only permitted rounding.
      CHECK(got.at(name) == static_cast<double>(static_cast<float>(value)));
    }
  }
}

}  // namespace

TEST_SUITE("te") {
  TEST_CASE("prior formula hand values") {
    PriorState p(1.0, 10.0);
    CHECK(p.value() == 1.0 / 11.0);
    p.add(989, 159);
    CHECK(p.value() == doctest::Approx(0.16).epsilon(1e-12));
    PriorState all_clicks(1.0, 10.0);
    all_clicks.add(89, 89);
    CHECK(all_clicks.value() == doctest::Approx(0.9).epsilon(1e-12));
  }

  TEST_CASE("te_value formula hand values") {
    TargetEncoder enc(1, 100.0);
    CHECK(enc.te_value(0, "unseen", 0.17) == 0.17);  // exactly the prior
    for (int i = 0; i < 100; ++i) enc.add(0, "v", i < 20);
    CHECK(enc.te_value(0, "v", 0.17) == doctest::Approx(0.185).epsilon(1e-12));
  }

  TEST_CASE("te_value approaches the empirical rate in the large-history limit") {
    TargetEncoder enc(1, 100.0);
    for (int i = 0; i < 1000000; ++i) enc.add(0, "v", i % 10 < 3);
    CHECK(std::abs(enc.te_value(0, "v", 0.17) - 0.3) < 1e-4);
  }

  TEST_CASE("hist_imps hand values") {
    TargetEncoder enc(1, 100.0);
    CHECK(enc.hist_imps(0, "unseen") == 0.0);
    enc.add(0, "v", false);
    CHECK(enc.hist_imps(0, "v") == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    for (int i = 0; i < 98; ++i) enc.add(0, "v", false);
    CHECK(enc.hist_imps(0, "v") == doctest::Approx(std::log(100.0)).epsilon(1e-12));
  }

  TEST_CASE("same-hour rows with the same value get identical features") {
    const LogSchema schema = testutil::toy_schema(1);
    const std::int64_t h = 16364 * 24;
    std::vector<ImpressionEvent> events = {
        testutil::make_event(1, h, true, {"x"}),
        testutil::make_event(2, h + 1, true, {"x"}),
        testutil::make_event(3, h + 1, false, {"x"}),
    };
    const FeatureMatrix m = te_pass(events, schema);
    const int te = m.column_index("c0__te");
    const int hist = m.column_index("c0__hist_imps");
    REQUIRE(te >= 0);
    REQUIRE(hist >= 0);
    CHECK(m.at(1, te) == m.at(2, te));      // neither hour-h+1 row sees the other
    CHECK(m.at(1, hist) == m.at(2, hist));
  }

  TEST_CASE("first-hour rows fall back to the empty prior everywhere") {
    const LogSchema schema = testutil::toy_schema(2);
    std::vector<ImpressionEvent> events = {
        testutil::make_event(1, 16364 * 24, true, {"x", "y"}),
        testutil::make_event(2, 16364 * 24 + 3, false, {"x", "y"}),
    };
    const FeatureMatrix m = te_pass(events, schema);
    const float prior0 = static_cast<float>(1.0 / 11.0);
    CHECK(m.at(0, m.column_index("prior_ctr")) == prior0);
    for (const char* col : {"c0__te", "c1__te"})
      CHECK(m.at(0, m.column_index(col)) == prior0);
    for (const char* col : {"c0__hist_imps", "c1__hist_imps"})
      CHECK(m.at(0, m.column_index(col)) == 0.0f);
  }

  TEST_CASE("three-hour toy log equals the rescan oracle") {
    const LogSchema schema = testutil::toy_schema(1);
    const std::int64_t h = 16364 * 24;
    std::vector<ImpressionEvent> events = {
        testutil::make_event(1, h, true, {"a"}),
        testutil::make_event(2, h, false, {"b"}),
        testutil::make_event(3, h + 1, true, {"a"}),
        testutil::make_event(4, h + 1, false, {"a"}),
        testutil::make_event(5, h + 2, false, {"b"}),
        testutil::make_event(6, h + 2, true, {"a"}),
    };
    check_against_oracle(events, schema);
  }

  TEST_CASE("randomized logs equal the rescan oracle") {
    for (std::uint64_t seed : {21ULL, 22ULL, 23ULL}) {
      Rng rng(seed);
      const auto events = testutil::random_log(
          rng, {.n_days = 3, .max_rows_per_hour = 7, .n_cats = 3, .cardinality = 3});
      check_against_oracle(events, testutil::toy_schema(3));
    }
  }

  TEST_CASE("unsorted input is rejected") {
    const LogSchema schema = testutil::toy_schema(1);
    std::vector<ImpressionEvent> events = {
        testutil::make_event(1, 16364 * 24 + 1, true, {"a"}),
        testutil::make_event(2, 16364 * 24, false, {"a"}),
    };
    CHECK_THROWS_AS(te_pass(events, schema), Error);
  }

  TEST_CASE("no-lookahead: changing hours >= H leaves hour-H rows unchanged") {
    Rng rng(31);
    auto events = testutil::random_log(rng, {.n_days = 2, .max_rows_per_hour = 5});
    const LogSchema schema = testutil::toy_schema(2);
    const FeatureMatrix base = te_pass(events, schema);
    const std::int64_t cut = events[events.size() / 2].hour;

    // Relabel everything at hours >= cut and drop the final quarter.
    auto mutated = events;
    for (auto& e : mutated)
      if (e.hour >= cut) e.click = !e.click;
    mutated.resize(events.size() - events.size() / 4);
    const FeatureMatrix after = te_pass(mutated, schema);
    for (std::size_t r = 0; r < after.n_rows(); ++r) {
      if (events[r].hour > cut) continue;  // only rows at hours <= cut compared
      for (std::size_t c = 0; c < after.n_cols(); ++c)
        CHECK(after.at(r, c) == base.at(r, c));
    }
  }

  TEST_CASE("within-hour permutation changes no feature") {
    Rng rng(32);
    auto events = testutil::random_log(rng, {.n_days = 2, .max_rows_per_hour = 6});
    const LogSchema schema = testutil::toy_schema(2);
    const FeatureMatrix base = te_pass(events, schema);

    auto permuted = events;
    std::size_t i = 0;
    while (i < permuted.size()) {
      std::size_t end = i;
      while (end < permuted.size() && permuted[end].hour == permuted[i].hour) ++end;
      std::reverse(permuted.begin() + i, permuted.begin() + end);
      i = end;
    }
    const FeatureMatrix after = te_pass(permuted, schema);
    for (std::size_t r = 0; r < after.n_rows(); ++r) {
      // Compare by row id against the original position.
      const auto it = std::find(base.row_ids.begin(), base.row_ids.end(), after.row_ids[r]);
      REQUIRE(it != base.row_ids.end());
      const std::size_t orig = static_cast<std::size_t>(it - base.row_ids.begin());
      for (std::size_t c = 0; c < after.n_cols(); ++c)
        CHECK(after.at(r, c) == base.at(orig, c));
    }
  }

  TEST_CASE("ranges and monotone history volume") {
    Rng rng(33);
    const auto events = testutil::random_log(rng, {.n_days = 3, .max_rows_per_hour = 5});
    const LogSchema schema = testutil::toy_schema(2);
    const FeatureMatrix m = te_pass(events, schema);
    const int prior = m.column_index("prior_ctr");
    const int te0 = m.column_index("c0__te");
    const int hist0 = m.column_index("c0__hist_imps");
    std::map<std::string, float> last_hist;
    for (std::size_t r = 0; r < m.n_rows(); ++r) {
      CHECK(m.at(r, prior) > 0.0f);
      CHECK(m.at(r, prior) < 1.0f);
      CHECK(m.at(r, te0) > 0.0f);
      CHECK(m.at(r, te0) < 1.0f);
      CHECK(m.at(r, hist0) >= 0.0f);
      const std::string& v = events[r].cats[0];
      if (last_hist.count(v)) CHECK(m.at(r, hist0) >= last_hist[v]);
      last_hist[v] = m.at(r, hist0);
    }
  }

  TEST_CASE("te_pass column layout") {
    const LogSchema schema = testutil::toy_schema(2);
    std::vector<ImpressionEvent> events = {
        testutil::make_event(1, 16364 * 24, false, {"a", "b"})};
    const FeatureMatrix m = te_pass(events, schema);
    CHECK(m.column_names ==
          std::vector<std::string>{"prior_ctr", "hour_of_day", "c0__te", "c0__hist_imps",
                                   "c1__te", "c1__hist_imps"});
    CHECK(m.labels == std::vector<std::uint8_t>{0});
  }
}
