#include "chronofeat/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "chronofeat/common.hpp"
#include "chronofeat/metrics.hpp"

namespace chronofeat {

void SynthConfig::validate() const {
  if (n_days < 1) fail("synth config: n_days must be >= 1, got ", n_days);
  if (!(rows_per_hour_mean > 0))
    fail("synth config: rows_per_hour mean must be > 0, got ", rows_per_hour_mean);
  if (rows_per_hour_dispersion < 0) fail("synth config: dispersion must be >= 0");
  if (!(base_ctr > 0 && base_ctr < 1))
    fail("synth config: base_ctr must lie in (0,1), got ", base_ctr);
  if (entity_effect_scale < 0 || entity_drift_scale < 0)
    fail("synth config: effect scales must be >= 0");
  if (columns.empty()) fail("synth config: needs at least one column");
  for (const auto& c : columns) {
    if (c.name.empty()) fail("synth config: column with empty name");
    if (c.cardinality < 1) fail("synth config: column '", c.name, "' cardinality must be >= 1");
    if (c.zipf_exponent < 0) fail("synth config: column '", c.name, "' zipf exponent < 0");
  }
}

SynthConfig load_synth_config(const std::string& path, std::uint64_t default_seed) {
  std::ifstream in(path);
  if (!in) fail("cannot open ", path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    fail(path, ": invalid JSON: ", e.what());
  }
  SynthConfig c;
  c.seed = default_seed;
  c.n_days = j.value("n_days", c.n_days);
  if (j.contains("rows_per_hour")) {
    const auto& r = j.at("rows_per_hour");
    c.rows_per_hour_mean = r.value("mean", c.rows_per_hour_mean);
    c.rows_per_hour_dispersion = r.value("dispersion", c.rows_per_hour_dispersion);
  }
  c.base_ctr = j.value("base_ctr", c.base_ctr);
  c.entity_effect_scale = j.value("entity_effect_scale", c.entity_effect_scale);
  c.entity_drift_scale = j.value("entity_drift_scale", c.entity_drift_scale);
  c.daily_drift_amplitude = j.value("daily_drift_amplitude", c.daily_drift_amplitude);
  c.hourly_seasonality_amplitude =
      j.value("hourly_seasonality_amplitude", c.hourly_seasonality_amplitude);
  if (j.contains("start_date")) {
    const std::string date = j.at("start_date").get<std::string>();
    if (date.size() != 10 || date[4] != '-' || date[7] != '-')
      fail(path, ": start_date must be YYYY-MM-DD, got '", date, "'");
    c.start_day = days_from_civil(
        static_cast<int>(parse_int64(date.substr(0, 4), "start_date year")),
        static_cast<int>(parse_int64(date.substr(5, 2), "start_date month")),
        static_cast<int>(parse_int64(date.substr(8, 2), "start_date day")));
  }
  c.seed = j.value("seed", c.seed);
  if (!j.contains("columns")) fail(path, ": synth config needs a columns array");
  for (const auto& jc : j.at("columns")) {
    SynthColumnConfig col;
    col.name = jc.at("name").get<std::string>();
    col.cardinality = jc.value("cardinality", col.cardinality);
    col.zipf_exponent = jc.value("zipf_exponent", col.zipf_exponent);
    col.carries_effect = jc.value("carries_effect", col.carries_effect);
    c.columns.push_back(std::move(col));
  }
  c.validate();
  return c;
}

namespace {

constexpr double kTau = 6.283185307179586476925286766559;  // 2*pi

double logit(double p) { return std::log(p / (1.0 - p)); }

// Zipf sampler over {0..K-1} with weight (k+1)^-s, via inverse CDF.
struct ZipfCdf {
  std::vector<double> cum;
  explicit ZipfCdf(std::int64_t cardinality, double exponent) {
    cum.resize(static_cast<std::size_t>(cardinality));
    double total = 0.0;
    for (std::size_t k = 0; k < cum.size(); ++k) {
      total += std::pow(static_cast<double>(k + 1), -exponent);
      cum[k] = total;
    }
    for (auto& v : cum) v /= total;
    cum.back() = 1.0;
  }
  std::size_t draw(Rng& rng) const {
    const double u = rng.uniform01_open();
    return static_cast<std::size_t>(
        std::upper_bound(cum.begin(), cum.end(), u) - cum.begin());
  }
};

}  // namespace

SynthResult generate(const SynthConfig& config) {
  config.validate();
  SynthResult out;
  out.schema.categorical_columns.reserve(config.columns.size());
  for (const auto& c : config.columns) out.schema.categorical_columns.push_back(c.name);
  out.schema.validate();

  std::vector<ZipfCdf> cdfs;
  cdfs.reserve(config.columns.size());
  for (const auto& c : config.columns) cdfs.emplace_back(c.cardinality, c.zipf_exponent);

  // Setup stream: static effects, then the per-day random walks, drawn
  // upfront so per-row draws never depend on arrival order.
  Rng setup(config.seed);
  std::vector<std::vector<double>> effects(config.columns.size());
  std::vector<std::vector<double>> walks(config.columns.size());  // value*n_days
  for (std::size_t ci = 0; ci < config.columns.size(); ++ci) {
    if (!config.columns[ci].carries_effect) continue;
    const auto card = static_cast<std::size_t>(config.columns[ci].cardinality);
    effects[ci].resize(card);
    for (auto& e : effects[ci]) e = config.entity_effect_scale * setup.normal();
    walks[ci].assign(card * static_cast<std::size_t>(config.n_days), 0.0);
    for (std::size_t k = 0; k < card; ++k) {
      double level = 0.0;
      for (int d = 0; d < config.n_days; ++d) {
        level += config.entity_drift_scale * setup.normal();
        walks[ci][k * static_cast<std::size_t>(config.n_days) +
                  static_cast<std::size_t>(d)] = level;
      }
    }
  }

  const double base_logit = logit(config.base_ctr);
  constexpr double kProbFloor = 1e-6;
  std::uint64_t row_index = 0;
  for (int d = 0; d < config.n_days; ++d) {
    Rng day_rng(splitmix64(config.seed ^
                           (0xD1B54A32D192ED03ULL * static_cast<std::uint64_t>(d + 1))));
    const double day_term =
        config.daily_drift_amplitude * std::sin(kTau * static_cast<double>(d) / 7.0);
    for (int h = 0; h < 24; ++h) {
      double mean = config.rows_per_hour_mean;
      if (config.rows_per_hour_dispersion > 0) {
        const double s = config.rows_per_hour_dispersion;
        mean *= std::exp(s * day_rng.normal() - 0.5 * s * s);
      }
      const std::int64_t n_rows = day_rng.poisson(mean);
      const double hour_term = config.hourly_seasonality_amplitude *
                               std::sin(kTau * static_cast<double>(h) / 24.0);
      for (std::int64_t r = 0; r < n_rows; ++r) {
        ImpressionEvent ev;
        ev.row_id = splitmix64(row_index ^ (config.seed * 0x9E3779B97F4A7C15ULL));
        ev.hour = (config.start_day + d) * 24 + h;
        ev.cats.resize(config.columns.size());
        double z = base_logit + day_term + hour_term;
        for (std::size_t ci = 0; ci < config.columns.size(); ++ci) {
          const std::size_t k = cdfs[ci].draw(day_rng);
          ev.cats[ci] = cat("v", k);
          if (!effects[ci].empty()) {
            z += effects[ci][k];
            z += walks[ci][k * static_cast<std::size_t>(config.n_days) +
                           static_cast<std::size_t>(d)];
          }
        }
        double p = 1.0 / (1.0 + std::exp(-z));
        if (p < kProbFloor || p > 1.0 - kProbFloor) {
          p = std::clamp(p, kProbFloor, 1.0 - kProbFloor);
          out.clamp_count += 1;
        }
        ev.click = day_rng.uniform01() < p ? 1 : 0;
        out.events.push_back(std::move(ev));
        out.true_probs.push_back(p);
        ++row_index;
      }
    }
  }
  return out;
}

double ground_truth_auc(const SynthResult& result) {
  std::vector<std::uint8_t> labels;
  labels.reserve(result.events.size());
  for (const auto& ev : result.events) labels.push_back(ev.click);
  return roc_auc(result.true_probs, labels);
}

}  // namespace chronofeat
