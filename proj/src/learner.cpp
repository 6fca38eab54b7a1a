#include "chronofeat/learner.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <unordered_map>

#include <json.hpp>

#include "chronofeat/common.hpp"
#include "chronofeat/csv.hpp"

namespace chronofeat {

std::string model_kind_name(ModelKind kind) {
  return kind == ModelKind::logistic_sgd ? "logistic_sgd" : "external";
}

ModelKind parse_model_kind(const std::string& name) {
  if (name == "logistic_sgd") return ModelKind::logistic_sgd;
  if (name == "external") return ModelKind::external;
  fail("unknown model kind '", name, "' (expected logistic_sgd or external)");
}

void LearnerConfig::validate() const {
  if (!(learning_rate > 0)) fail("learning_rate must be > 0, got ", learning_rate);
  if (l2_penalty < 0) fail("l2_penalty must be >= 0, got ", l2_penalty);
  if (max_epochs < 1) fail("max_epochs must be >= 1, got ", max_epochs);
  if (batch_size < 1) fail("batch_size must be >= 1, got ", batch_size);
  if (early_stopping_patience < 1)
    fail("early_stopping_patience must be >= 1, got ", early_stopping_patience);
}

namespace {

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// Per-column train statistics: median over observed values, then mean/std of
// the imputed column. Constant columns get stddev 1 so they standardize to 0.
struct ColumnStats {
  std::vector<double> median, mean, stddev;
};

ColumnStats train_column_stats(const FeatureMatrix& train) {
  const std::size_t n = train.n_rows(), d = train.n_cols();
  ColumnStats s;
  s.median.assign(d, 0.0);
  s.mean.assign(d, 0.0);
  s.stddev.assign(d, 1.0);
  std::vector<double> observed;
  for (std::size_t c = 0; c < d; ++c) {
    observed.clear();
    for (std::size_t r = 0; r < n; ++r) {
      const float v = train.values[r * d + c];
      if (!std::isnan(v)) observed.push_back(v);
    }
    if (!observed.empty()) {
      const std::size_t mid = observed.size() / 2;
      std::nth_element(observed.begin(), observed.begin() + mid, observed.end());
      double med = observed[mid];
      if (observed.size() % 2 == 0) {
        const double lower = *std::max_element(observed.begin(), observed.begin() + mid);
        med = 0.5 * (lower + med);
      }
      s.median[c] = med;
    }
    double sum = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
      const float v = train.values[r * d + c];
      sum += std::isnan(v) ? s.median[c] : v;
    }
    const double mean = sum / static_cast<double>(n);
    double sq = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
      const float v = train.values[r * d + c];
      const double x = (std::isnan(v) ? s.median[c] : v) - mean;
      sq += x * x;
    }
    const double sd = std::sqrt(sq / static_cast<double>(n));
    s.mean[c] = mean;
    s.stddev[c] = sd > 1e-12 ? sd : 1.0;
  }
  return s;
}

std::vector<double> transform(const FeatureMatrix& m, const ColumnStats& s) {
  const std::size_t n = m.n_rows(), d = m.n_cols();
  std::vector<double> out(n * d);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < d; ++c) {
      const float v = m.values[r * d + c];
      const double x = std::isnan(v) ? s.median[c] : v;
      out[r * d + c] = (x - s.mean[c]) / s.stddev[c];
    }
  }
  return out;
}

std::vector<double> linear_proba(const std::vector<double>& x, std::size_t d,
                                 const std::vector<double>& w, double b) {
  const std::size_t n = x.size() / d;
  std::vector<double> p(n);
  for (std::size_t r = 0; r < n; ++r) {
    double z = b;
    for (std::size_t c = 0; c < d; ++c) z += w[c] * x[r * d + c];
    p[r] = sigmoid(z);
  }
  return p;
}

}  // namespace

FittedModel fit(const FeatureMatrix& train, const FeatureMatrix& val,
                const LearnerConfig& config) {
  config.validate();
  if (train.column_names != val.column_names)
    fail("train/val feature columns differ");
  if (train.n_rows() == 0) fail("cannot fit on an empty training matrix");
  bool any_pos = false, any_neg = false;
  for (auto l : train.labels) {
    if (l > 1) fail("non-binary training label ", int(l));
    (l ? any_pos : any_neg) = true;
  }
  if (!(any_pos && any_neg)) fail("training labels are all one class");

  const std::size_t n = train.n_rows(), d = train.n_cols();
  ColumnStats stats = train_column_stats(train);
  const std::vector<double> x = transform(train, stats);
  const std::vector<double> xv = transform(val, stats);

  FittedModel model;
  model.column_names = train.column_names;
  model.median = stats.median;
  model.mean = stats.mean;
  model.stddev = stats.stddev;

  std::vector<double> w(d, 0.0);
  double b = 0.0;
  std::vector<double> best_w = w;
  double best_b = b;
  double best_metric = -1.0;
  int best_epoch = 0;
  int stale = 0;

  Rng rng(config.seed);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> gw(d);
  const auto batch = static_cast<std::size_t>(config.batch_size);

  int epoch = 0;
  while (epoch < config.max_epochs) {
    ++epoch;
    // Fisher-Yates with our own generator keeps the visit order reproducible.
    for (std::size_t i = n; i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(rng.uniform_int(i));
      std::swap(order[i - 1], order[j]);
    }
    for (std::size_t start = 0; start < n; start += batch) {
      const std::size_t stop = std::min(start + batch, n);
      const double inv = 1.0 / static_cast<double>(stop - start);
      std::fill(gw.begin(), gw.end(), 0.0);
      double gb = 0.0;
      for (std::size_t k = start; k < stop; ++k) {
        const std::size_t r = order[k];
        double z = b;
        for (std::size_t c = 0; c < d; ++c) z += w[c] * x[r * d + c];
        const double err = sigmoid(z) - static_cast<double>(train.labels[r]);
        for (std::size_t c = 0; c < d; ++c) gw[c] += err * x[r * d + c];
        gb += err;
      }
      for (std::size_t c = 0; c < d; ++c)
        w[c] -= config.learning_rate * (gw[c] * inv + config.l2_penalty * w[c]);
      b -= config.learning_rate * gb * inv;
    }

    const std::vector<double> val_p = linear_proba(xv, d, w, b);
    const double metric = metric_value(config.eval_metric, val_p, val.labels);
    model.val_metric_history.push_back(metric);
    if (metric > best_metric) {
      best_metric = metric;
      best_w = w;
      best_b = b;
      best_epoch = epoch;
      stale = 0;
    } else if (++stale >= config.early_stopping_patience) {
      break;
    }
  }

  model.weights = std::move(best_w);
  model.bias = best_b;
  model.final_weights = std::move(w);
  model.final_bias = b;
  model.best_epoch = best_epoch;
  model.epochs_run = epoch;
  model.best_val_metric = best_metric;
  return model;
}

std::vector<double> predict_proba(const FittedModel& model, const FeatureMatrix& matrix) {
  if (matrix.column_names != model.column_names)
    fail("feature columns do not match the fitted model");
  const ColumnStats stats{model.median, model.mean, model.stddev};
  const std::vector<double> x = transform(matrix, stats);
  return linear_proba(x, matrix.n_cols(), model.weights, model.bias);
}

double reg_log_loss(const std::vector<double>& values, std::size_t n_cols,
                    const std::vector<std::uint8_t>& labels, const std::vector<double>& weights,
                    double bias, double l2_penalty) {
  const std::size_t n = labels.size();
  if (values.size() != n * n_cols) fail("matrix/label shape mismatch");
  double loss = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    double z = bias;
    for (std::size_t c = 0; c < n_cols; ++c) z += weights[c] * values[r * n_cols + c];
    // log(1+e^z) - y*z, evaluated without overflow.
    loss += std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))) -
            static_cast<double>(labels[r]) * z;
  }
  loss /= static_cast<double>(n);
  double sq = 0.0;
  for (double wc : weights) sq += wc * wc;
  return loss + 0.5 * l2_penalty * sq;
}

void reg_log_loss_gradient(const std::vector<double>& values, std::size_t n_cols,
                           const std::vector<std::uint8_t>& labels,
                           const std::vector<double>& weights, double bias, double l2_penalty,
                           std::vector<double>& grad_weights, double& grad_bias) {
  const std::size_t n = labels.size();
  if (values.size() != n * n_cols) fail("matrix/label shape mismatch");
  grad_weights.assign(n_cols, 0.0);
  grad_bias = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    double z = bias;
    for (std::size_t c = 0; c < n_cols; ++c) z += weights[c] * values[r * n_cols + c];
    const double err = sigmoid(z) - static_cast<double>(labels[r]);
    for (std::size_t c = 0; c < n_cols; ++c) grad_weights[c] += err * values[r * n_cols + c];
    grad_bias += err;
  }
  const double inv = 1.0 / static_cast<double>(n);
  for (std::size_t c = 0; c < n_cols; ++c)
    grad_weights[c] = grad_weights[c] * inv + l2_penalty * weights[c];
  grad_bias *= inv;
}

void write_external_dir(const FeatureMatrix& train, const FeatureMatrix& val,
                        const FeatureMatrix& test, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const struct {
    const char* name;
    const FeatureMatrix* m;
  } parts[] = {{"train", &train}, {"val", &val}, {"test", &test}};
  for (const auto& p : parts) {
    p.m->validate();
    write_matrix(*p.m, (fs::path(dir) / cat(p.name, ".fmx")).string());
    write_matrix_csv_file(*p.m, (fs::path(dir) / cat(p.name, ".csv")).string());
  }

  nlohmann::json j;
  j["matrices"] = {"train", "val", "test"};
  j["formats"] = {"fmx", "csv"};
  j["n_features"] = train.n_cols();
  j["expects"] = {"predictions_val.csv", "predictions_test.csv"};
  j["predictions_format"] = "row_id,score";
  j["reference_hyperparameters"] = {
      {"n_estimators", 800},        {"learning_rate", 0.05},
      {"max_depth", 6},             {"subsample", 0.8},
      {"colsample_bytree", 0.8},    {"min_child_weight", 10.0},
      {"reg_lambda", 5.0},          {"random_state", 42},
      {"n_jobs", 1},                {"tree_method", "hist"},
  };
  std::ofstream out(fs::path(dir) / "manifest.json");
  if (!out) fail("cannot write ", dir, "/manifest.json");
  out << j.dump(2) << "\n";
}

ExternalPredictions read_predictions_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open ", path);
  CsvReader reader(in);
  std::vector<std::string> row;
  if (!reader.read_row(row)) fail(path, ": empty predictions file");
  if (row.size() != 2 || row[0] != "row_id" || row[1] != "score")
    fail(path, ": expected header 'row_id,score'");
  ExternalPredictions preds;
  while (reader.read_row(row)) {
    if (row.size() != 2) fail(path, ":", reader.row_line(), ": expected 2 fields");
    preds.row_ids.push_back(parse_uint64(row[0], cat(path, ":", reader.row_line())));
    preds.scores.push_back(parse_double(row[1], cat(path, ":", reader.row_line())));
  }
  return preds;
}

std::vector<double> align_predictions(const FeatureMatrix& matrix,
                                      const ExternalPredictions& preds) {
  std::unordered_map<std::uint64_t, double> by_id;
  by_id.reserve(preds.row_ids.size());
  for (std::size_t i = 0; i < preds.row_ids.size(); ++i) {
    if (!by_id.emplace(preds.row_ids[i], preds.scores[i]).second)
      fail("duplicate prediction for row_id ", preds.row_ids[i]);
  }
  if (by_id.size() != matrix.n_rows())
    fail("predictions cover ", by_id.size(), " rows, matrix has ", matrix.n_rows());
  std::vector<double> out;
  out.reserve(matrix.n_rows());
  for (std::uint64_t id : matrix.row_ids) {
    auto it = by_id.find(id);
    if (it == by_id.end()) fail("predictions missing row_id ", id);
    out.push_back(it->second);
  }
  return out;
}

}  // namespace chronofeat
