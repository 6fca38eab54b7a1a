#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "chronofeat/feature_matrix.hpp"
#include "chronofeat/ingest.hpp"

namespace chronofeat {

struct TeParams {
  double prior_a = 1.0;      // smoothing pseudo-clicks for the global prior
  double prior_b = 10.0;     // smoothing pseudo-non-clicks
  double smoothing_m = 100.0;  // target-encoding smoothing strength
};

/// Cumulative impression/click counts over hours < h; the smoothed global
/// click rate is the fallback for unseen categorical values.
class PriorState {
 public:
  PriorState(double a, double b) : a_(a), b_(b) {}

  double value() const {
    return (static_cast<double>(clicks_) + a_) / (static_cast<double>(imps_) + a_ + b_);
  }

  void add(std::int64_t imps, std::int64_t clicks);

  std::int64_t impressions() const { return imps_; }
  std::int64_t clicks() const { return clicks_; }

 private:
  std::int64_t imps_ = 0;
  std::int64_t clicks_ = 0;
  double a_, b_;
};

/// Per-column, per-value cumulative counts with m-smoothed encoding. State
/// is keyed by the exact string value; category values are never hashed.
class TargetEncoder {
 public:
  TargetEncoder(std::size_t n_columns, double smoothing_m);

  /// (C + m * prior) / (I + m); exactly `prior` for unseen values.
  double te_value(std::size_t column, const std::string& value, double prior) const;

  /// log(1 + cumulative impressions); 0 for unseen values.
  double hist_imps(std::size_t column, const std::string& value) const;

  void add(std::size_t column, const std::string& value, bool click);

 private:
  struct ValueCounts {
    std::int64_t imps = 0;
    std::int64_t clicks = 0;
  };
  std::vector<std::unordered_map<std::string, ValueCounts>> columns_;
  double m_;
};

/// One chronological pass with per-hour batching: rows at hour h are encoded
/// from state reflecting hours < h only, then hour h is folded into state.
/// Input must be sorted by hour ascending (ties keep file order). Output
/// columns: prior_ctr, hour_of_day, then per column <c>__te, <c>__hist_imps.
FeatureMatrix te_pass(const std::vector<ImpressionEvent>& events, const LogSchema& schema,
                      const TeParams& params = {});

}  // namespace chronofeat
