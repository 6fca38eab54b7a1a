#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "chronofeat/feature_matrix.hpp"
#include "chronofeat/metrics.hpp"

namespace chronofeat {

enum class ModelKind { logistic_sgd, external };

std::string model_kind_name(ModelKind kind);
ModelKind parse_model_kind(const std::string& name);

struct LearnerConfig {
  ModelKind model = ModelKind::logistic_sgd;
  double learning_rate = 0.05;
  double l2_penalty = 1e-6;
  int max_epochs = 200;
  int batch_size = 256;
  int early_stopping_patience = 10;  // evaluations without improvement
  MetricKind eval_metric = MetricKind::roc_auc;
  std::uint64_t seed = 42;
  // missing_value_policy is always train_median_impute.

  void validate() const;
};

/// Logistic model over standardized, median-imputed features. `weights`/`bias`
/// are the best-validation-epoch snapshot used for prediction; the final-epoch
/// state is kept alongside for inspection.
struct FittedModel {
  std::vector<std::string> column_names;
  std::vector<double> weights;
  double bias = 0.0;
  std::vector<double> final_weights;
  double final_bias = 0.0;
  // Per-column train-split statistics applied before the linear map.
  std::vector<double> median;
  std::vector<double> mean;
  std::vector<double> stddev;
  int best_epoch = 0;  // 1-based
  int epochs_run = 0;
  double best_val_metric = 0.0;
  std::vector<double> val_metric_history;  // one entry per epoch run
};

/// Mini-batch SGD with per-epoch validation and patience-based early stopping.
/// Deterministic for a fixed seed. Errors on column mismatch or single-class
/// training labels.
FittedModel fit(const FeatureMatrix& train, const FeatureMatrix& val,
                const LearnerConfig& config);

/// Probabilities in (0,1) from the best-epoch snapshot. Columns must match
/// the training columns exactly.
std::vector<double> predict_proba(const FittedModel& model, const FeatureMatrix& matrix);

/// Regularized mean log loss and its analytic gradient on an already
/// transformed row-major matrix; exposed so the gradient can be checked
/// against finite differences.
double reg_log_loss(const std::vector<double>& values, std::size_t n_cols,
                    const std::vector<std::uint8_t>& labels, const std::vector<double>& weights,
                    double bias, double l2_penalty);
void reg_log_loss_gradient(const std::vector<double>& values, std::size_t n_cols,
                           const std::vector<std::uint8_t>& labels,
                           const std::vector<double>& weights, double bias, double l2_penalty,
                           std::vector<double>& grad_weights, double& grad_bias);

/// File contract for external learners: matrices out, predictions back in.
struct ExternalPredictions {
  std::vector<std::uint64_t> row_ids;
  std::vector<double> scores;
};

/// Writes train/val/test in both formats plus manifest.json carrying the
/// reference gradient-boosting hyperparameters.
void write_external_dir(const FeatureMatrix& train, const FeatureMatrix& val,
                        const FeatureMatrix& test, const std::string& dir);

/// Parses a `row_id,score` CSV (header required).
ExternalPredictions read_predictions_csv(const std::string& path);

/// Reorders predictions to match the matrix rows; errors on missing,
/// duplicate, or unknown row_ids.
std::vector<double> align_predictions(const FeatureMatrix& matrix,
                                      const ExternalPredictions& preds);

}  // namespace chronofeat
