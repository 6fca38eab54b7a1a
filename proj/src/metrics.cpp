#include "chronofeat/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>
#include <unordered_set>

#include "chronofeat/common.hpp"

namespace chronofeat {

double roc_auc(const std::vector<double>& scores, const std::vector<std::uint8_t>& labels) {
  if (scores.size() != labels.size()) fail("scores/labels length mismatch");
  const std::size_t n = scores.size();
  std::int64_t n_pos = 0;
  for (auto l : labels) n_pos += l ? 1 : 0;
  const std::int64_t n_neg = static_cast<std::int64_t>(n) - n_pos;
  if (n_pos == 0 || n_neg == 0)
    fail("roc_auc undefined: needs both classes (n_pos=", n_pos, ", n_neg=", n_neg, ")");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Rank sum of positives with average ranks over tied groups.
  double pos_rank_sum = 0.0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);  // 1-based
    for (std::size_t k = i; k < j; ++k) {
      if (labels[order[k]]) pos_rank_sum += avg_rank;
    }
    i = j;
  }
  const double u = pos_rank_sum - 0.5 * static_cast<double>(n_pos) *
                                      static_cast<double>(n_pos + 1);
  return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

double pr_auc(const std::vector<double>& scores, const std::vector<std::uint8_t>& labels) {
  if (scores.size() != labels.size()) fail("scores/labels length mismatch");
  const std::size_t n = scores.size();
  std::int64_t n_pos = 0;
  for (auto l : labels) n_pos += l ? 1 : 0;
  if (n_pos == 0) fail("pr_auc undefined: no positive labels");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  double ap = 0.0;
  std::int64_t tp = 0;
  std::size_t seen = 0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    std::int64_t group_tp = 0;
    while (j < n && scores[order[j]] == scores[order[i]]) {
      group_tp += labels[order[j]] ? 1 : 0;
      ++j;
    }
    tp += group_tp;
    seen = j;
    const double precision = static_cast<double>(tp) / static_cast<double>(seen);
    ap += precision * static_cast<double>(group_tp) / static_cast<double>(n_pos);
    i = j;
  }
  return ap;
}

MetricResult compute_metrics(const std::vector<double>& scores,
                             const std::vector<std::uint8_t>& labels) {
  MetricResult r;
  for (auto l : labels) (l ? r.n_pos : r.n_neg) += 1;
  r.roc_auc = roc_auc(scores, labels);
  r.pr_auc = pr_auc(scores, labels);
  return r;
}

PairedScores pair_by_row_id(const std::vector<std::uint64_t>& ids_a,
                            const std::vector<double>& scores_a,
                            const std::vector<std::uint64_t>& ids_b,
                            const std::vector<double>& scores_b) {
  if (ids_a.size() != scores_a.size() || ids_b.size() != scores_b.size())
    fail("prediction ids/scores length mismatch");
  if (ids_a.size() != ids_b.size())
    fail("paired comparison over different row counts: ", ids_a.size(), " vs ", ids_b.size());
  std::unordered_map<std::uint64_t, double> b_by_id;
  b_by_id.reserve(ids_b.size());
  for (std::size_t i = 0; i < ids_b.size(); ++i) {
    if (!b_by_id.emplace(ids_b[i], scores_b[i]).second)
      fail("duplicate row_id ", ids_b[i], " in predictions");
  }
  PairedScores out;
  out.scores_a.reserve(ids_a.size());
  out.scores_b.reserve(ids_a.size());
  std::unordered_set<std::uint64_t> seen;
  seen.reserve(ids_a.size());
  for (std::size_t i = 0; i < ids_a.size(); ++i) {
    if (!seen.insert(ids_a[i]).second) fail("duplicate row_id ", ids_a[i], " in predictions");
    auto it = b_by_id.find(ids_a[i]);
    if (it == b_by_id.end()) fail("row_id ", ids_a[i], " missing from paired predictions");
    out.scores_a.push_back(scores_a[i]);
    out.scores_b.push_back(it->second);
  }
  return out;
}

double metric_value(MetricKind kind, const std::vector<double>& scores,
                    const std::vector<std::uint8_t>& labels) {
  return kind == MetricKind::roc_auc ? roc_auc(scores, labels) : pr_auc(scores, labels);
}

double paired_delta(MetricKind kind, const std::vector<double>& scores_a,
                    const std::vector<double>& scores_b,
                    const std::vector<std::uint8_t>& labels) {
  return metric_value(kind, scores_a, labels) - metric_value(kind, scores_b, labels);
}

double percentile_sorted(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) fail("percentile of an empty sample");
  const std::size_t n = sorted.size();
  const double pos = q * static_cast<double>(n - 1);
  const std::size_t lo = static_cast<std::size_t>(pos);
  const double frac = pos - static_cast<double>(lo);
  if (lo + 1 >= n) return sorted[n - 1];
  return sorted[lo] + (sorted[lo + 1] - sorted[lo]) * frac;
}

BootstrapInterval bootstrap_ci(MetricKind kind, const std::vector<double>& scores_a,
                               const std::vector<double>& scores_b,
                               const std::vector<std::uint8_t>& labels, int b_resamples,
                               std::uint64_t seed) {
  if (b_resamples < 100) fail("bootstrap needs B >= 100, got ", b_resamples);
  if (scores_a.size() != labels.size() || scores_b.size() != labels.size())
    fail("bootstrap input length mismatch");
  const std::size_t n = labels.size();
  if (n == 0) fail("bootstrap over empty rows");

  std::vector<double> deltas;
  deltas.reserve(static_cast<std::size_t>(b_resamples));
  std::vector<double> ra(n), rb(n);
  std::vector<std::uint8_t> rl(n);
  constexpr int kMaxRetries = 100;
  for (int b = 0; b < b_resamples; ++b) {
    Rng rng(splitmix64(seed ^ (0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(b + 1))));
    bool ok = false;
    for (int attempt = 0; attempt < kMaxRetries && !ok; ++attempt) {
      bool any_pos = false, any_neg = false;
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t idx = static_cast<std::size_t>(rng.uniform_int(n));
        ra[i] = scores_a[idx];
        rb[i] = scores_b[idx];
        rl[i] = labels[idx];
        (rl[i] ? any_pos : any_neg) = true;
      }
      const bool degenerate =
          kind == MetricKind::roc_auc ? !(any_pos && any_neg) : !any_pos;
      if (!degenerate) {
        deltas.push_back(metric_value(kind, ra, rl) - metric_value(kind, rb, rl));
        ok = true;
      }
    }
    if (!ok) fail("bootstrap resample stayed single-class after ", kMaxRetries, " retries");
  }
  std::sort(deltas.begin(), deltas.end());
  return {percentile_sorted(deltas, 0.025), percentile_sorted(deltas, 0.975)};
}

std::vector<DayCtr> eda_ctr_by_day(const std::vector<ImpressionEvent>& events) {
  LogStats stats = log_stats(events);
  std::vector<DayCtr> out;
  out.reserve(stats.days.size());
  for (const auto& d : stats.days) out.push_back({d.day, d.n_rows, d.n_clicks, d.click_rate});
  return out;
}

std::vector<DayUnseen> eda_unseen_rate(const std::vector<ImpressionEvent>& events,
                                       const LogSchema& schema,
                                       const std::vector<std::string>& columns) {
  if (events.empty()) fail("eda_unseen_rate on empty event sequence");
  std::vector<int> col_indices;
  for (const auto& c : columns) {
    int idx = schema.categorical_index(c);
    if (idx < 0) fail("unknown categorical column '", c, "'");
    col_indices.push_back(idx);
  }

  // Group events by day, preserving day order.
  std::vector<std::int64_t> days;
  std::unordered_map<std::int64_t, std::vector<const ImpressionEvent*>> by_day;
  for (const auto& ev : events) {
    auto [it, inserted] = by_day.try_emplace(day_of_hour(ev.hour));
    if (inserted) days.push_back(day_of_hour(ev.hour));
    it->second.push_back(&ev);
  }
  std::sort(days.begin(), days.end());

  std::vector<DayUnseen> out;
  std::vector<std::unordered_set<std::string>> seen(columns.size());
  for (std::int64_t day : days) {
    const auto& rows = by_day[day];
    for (std::size_t c = 0; c < columns.size(); ++c) {
      DayUnseen du;
      du.day = day;
      du.column = columns[c];
      du.n_rows = static_cast<std::int64_t>(rows.size());
      const std::size_t idx = static_cast<std::size_t>(col_indices[c]);
      for (const auto* ev : rows) {
        if (!seen[c].count(ev->cats[idx])) du.n_unseen += 1;
      }
      du.unseen_rate = static_cast<double>(du.n_unseen) / static_cast<double>(du.n_rows);
      out.push_back(du);
    }
    for (std::size_t c = 0; c < columns.size(); ++c) {
      const std::size_t idx = static_cast<std::size_t>(col_indices[c]);
      for (const auto* ev : rows) seen[c].insert(ev->cats[idx]);
    }
  }
  return out;
}

}  // namespace chronofeat
