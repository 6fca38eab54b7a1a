#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "chronofeat/ingest.hpp"

namespace chronofeat {

struct SynthColumnConfig {
  std::string name;
  std::int64_t cardinality = 100;
  double zipf_exponent = 1.1;  // popularity skew; 0 = uniform
  // Marks the column(s) whose values carry the per-entity effect and drift.
  bool carries_effect = false;
};

struct SynthConfig {
  int n_days = 3;
  double rows_per_hour_mean = 100.0;
  // Lognormal multiplier on the hourly Poisson mean; 0 = plain Poisson.
  double rows_per_hour_dispersion = 0.0;
  double base_ctr = 0.17;
  // Static per-entity logit offset, N(0, scale^2), drawn once per value.
  double entity_effect_scale = 0.0;
  // Per-entity daily logit random walk with N(0, scale^2) steps; makes
  // recent-history features informative beyond a static encoding.
  double entity_drift_scale = 0.0;
  double daily_drift_amplitude = 0.0;        // global sine over days, period 7
  double hourly_seasonality_amplitude = 0.0; // global sine over hour of day
  std::int64_t start_day = 16364;            // 2014-10-21
  std::uint64_t seed = 14;
  std::vector<SynthColumnConfig> columns;

  void validate() const;
};

/// `default_seed` applies when the JSON has no "seed" field, so the CLI can
/// thread its global seed default through.
SynthConfig load_synth_config(const std::string& path, std::uint64_t default_seed = 14);

struct SynthResult {
  LogSchema schema;
  std::vector<ImpressionEvent> events;    // sorted by hour, stable within hour
  std::vector<double> true_probs;         // generating probability per event
  std::int64_t clamp_count = 0;           // probs pushed back into (0,1)
};

/// Deterministic given the seed; day ranges use derived per-day streams.
SynthResult generate(const SynthConfig& config);

/// ROC AUC of the true generating probabilities against the drawn labels —
/// an upper-bound reference for any learned model on the same log.
double ground_truth_auc(const SynthResult& result);

}  // namespace chronofeat
