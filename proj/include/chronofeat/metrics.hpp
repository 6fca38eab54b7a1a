#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "chronofeat/ingest.hpp"

namespace chronofeat {

struct MetricResult {
  double roc_auc = 0.0;
  double pr_auc = 0.0;
  std::int64_t n_pos = 0;
  std::int64_t n_neg = 0;
};

/// Mann-Whitney ROC AUC with half credit for ties, via rank sums.
/// Requires at least one positive and one negative label.
double roc_auc(const std::vector<double>& scores, const std::vector<std::uint8_t>& labels);

/// Average precision; tied score groups are processed atomically with
/// precision evaluated at the group end. Requires at least one positive.
double pr_auc(const std::vector<double>& scores, const std::vector<std::uint8_t>& labels);

MetricResult compute_metrics(const std::vector<double>& scores,
                             const std::vector<std::uint8_t>& labels);

/// Aligns two (row_id, score) prediction sets over the identical row set;
/// any mismatch in membership is an error.
struct PairedScores {
  std::vector<double> scores_a;
  std::vector<double> scores_b;
};
PairedScores pair_by_row_id(const std::vector<std::uint64_t>& ids_a,
                            const std::vector<double>& scores_a,
                            const std::vector<std::uint64_t>& ids_b,
                            const std::vector<double>& scores_b);

enum class MetricKind { roc_auc, pr_auc };

double metric_value(MetricKind kind, const std::vector<double>& scores,
                    const std::vector<std::uint8_t>& labels);

/// metric(a) - metric(b) on the same rows.
double paired_delta(MetricKind kind, const std::vector<double>& scores_a,
                    const std::vector<double>& scores_b,
                    const std::vector<std::uint8_t>& labels);

struct BootstrapInterval {
  double low = 0.0;
  double high = 0.0;
};

inline constexpr int kDefaultBootstrapB = 200;
inline constexpr std::uint64_t kDefaultBootstrapSeed = 42;

/// Linear-interpolation quantile of an ascending-sorted sample, q in [0,1].
double percentile_sorted(const std::vector<double>& sorted, double q);

/// Percentile (2.5%, 97.5%) interval of the paired row-resampled delta.
/// Deterministic given the seed; degenerate single-class resamples are
/// redrawn with a retry cap.
BootstrapInterval bootstrap_ci(MetricKind kind, const std::vector<double>& scores_a,
                               const std::vector<double>& scores_b,
                               const std::vector<std::uint8_t>& labels, int b_resamples,
                               std::uint64_t seed);

/// Exact per-day click-through rates, grouped by calendar day.
struct DayCtr {
  std::int64_t day = 0;
  std::int64_t n_rows = 0;
  std::int64_t n_clicks = 0;
  double ctr = 0.0;
};
std::vector<DayCtr> eda_ctr_by_day(const std::vector<ImpressionEvent>& events);

/// Per-day fraction of rows whose column value was never seen on earlier
/// days. The first day is 1.0 by definition.
struct DayUnseen {
  std::int64_t day = 0;
  std::string column;
  std::int64_t n_rows = 0;
  std::int64_t n_unseen = 0;
  double unseen_rate = 0.0;
};
std::vector<DayUnseen> eda_unseen_rate(const std::vector<ImpressionEvent>& events,
                                       const LogSchema& schema,
                                       const std::vector<std::string>& columns);

}  // namespace chronofeat
