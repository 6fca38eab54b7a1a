#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "chronofeat/folds.hpp"
#include "chronofeat/ingest.hpp"
#include "chronofeat/learner.hpp"
#include "chronofeat/metrics.hpp"
#include "chronofeat/timeagg.hpp"

namespace chronofeat {

/// The design grid: a product over length tuples, shapes, TE flags,
/// event-count sizes and fold offsets, plus the shared learner setup.
struct GridConfig {
  std::vector<std::vector<int>> lengths;
  std::vector<WindowShape> shapes;
  std::vector<bool> te_flags;
  std::vector<int> event_n;
  std::vector<int> folds;
  std::vector<std::string> entity_keys;
  LearnerConfig learner;

  void validate() const;
};

GridConfig default_grid();
/// Missing JSON fields fall back to the default grid; the learner block is
/// layered over `learner_defaults` so callers can inject flag/env defaults.
GridConfig load_grid_config(const std::string& path,
                            const LearnerConfig& learner_defaults = {});

/// One sweep cell. `event_n` variants only exist for the event-count shape;
/// every other shape is normalized to the default N so the product grid
/// introduces no duplicate work.
struct CellSpec {
  int fold_offset = 0;
  WindowSpec window;
  bool te_on = true;

  /// Path-safe deterministic identifier, e.g. "A__trailing_1-6-24__te-on__n50".
  std::string id() const;

  bool operator==(const CellSpec&) const = default;
};

/// Deterministic cell order: lexicographic over (lengths, shape, te,
/// event_n, fold) as listed in the grid, with duplicates collapsed.
std::vector<CellSpec> enumerate_cells(const GridConfig& grid);

struct CellResult {
  CellSpec spec;
  std::string status = "ok";  // "ok" | "failed"
  std::string error;
  std::int64_t n_features = 0;
  int best_epoch = 0;
  int epochs_run = 0;
  std::int64_t train_rows = 0;
  std::int64_t val_rows = 0;
  std::int64_t test_rows = 0;
  double val_roc_auc = 0.0;
  double val_pr_auc = 0.0;
  double test_roc_auc = 0.0;
  double test_pr_auc = 0.0;

  bool ok() const { return status == "ok"; }
};

struct SweepOutcome {
  std::vector<CellResult> cells;  // enumeration order
  int n_computed = 0;             // freshly run this invocation
  int n_resumed = 0;              // loaded from an existing cell.json
  int n_failed = 0;
};

/// Runs every grid cell against the log: featurize, fit, predict, score.
/// Cells already on disk are loaded, not recomputed; a cell failure is
/// recorded in its cell.json and does not abort the rest. Artifacts under
/// `out_dir`: sweep.json, per-fold label files, cells/<id>/{cell.json,
/// predictions_val.csv, predictions_test.csv, timing.json}, results.csv.
/// Everything except timing.json is byte-deterministic for fixed seeds.
SweepOutcome run_sweep(const std::vector<ImpressionEvent>& events, const LogSchema& schema,
                       const GridConfig& grid, const std::string& out_dir, int jobs);

struct FoldLabels {
  std::vector<std::uint64_t> val_ids, test_ids;
  std::vector<std::uint8_t> val_labels, test_labels;
};

struct LoadedCell {
  CellResult result;
  std::vector<double> val_scores;   // aligned to the fold's val label order
  std::vector<double> test_scores;  // aligned to the fold's test label order
};

struct ResultsStore {
  std::vector<int> fold_offsets;       // ascending
  std::map<int, FoldLabels> labels;    // by fold offset
  std::vector<LoadedCell> cells;       // ok cells, enumeration order
  std::vector<CellResult> failed;      // failed cells, enumeration order
};

ResultsStore load_results(const std::string& results_dir);

struct LeagueRow {
  WindowSpec window;
  bool te_on = true;
  std::vector<double> fold_deltas;  // by ResultsStore::fold_offsets order
  double mean_delta = 0.0;
  BootstrapInterval ci;
};

/// Ranked paired test-ROC-AUC deltas against the baseline window (matched on
/// TE flag), descending by mean-over-folds delta. The delta and its CI are
/// recomputed from the stored prediction files, never from cached metrics.
std::vector<LeagueRow> league_table(const ResultsStore& store, const WindowSpec& baseline,
                                    int bootstrap_b = kDefaultBootstrapB,
                                    std::uint64_t bootstrap_seed = kDefaultBootstrapSeed);

struct TrafficRow {
  std::vector<int> lengths;
  WindowShape shape = WindowShape::trailing;
  bool te_on = true;
  double mean_delta = 0.0;
  std::string sign;  // "+", "-", or "0" within 1e-5
};

/// Shape effects versus the trailing windows of the same length tuple.
std::vector<TrafficRow> traffic_light(const ResultsStore& store);

struct UpliftRow {
  std::vector<int> lengths;
  WindowShape shape = WindowShape::trailing;
  int n_pairs = 0;
  double mean_test_roc_delta = 0.0;
  double mean_test_pr_delta = 0.0;
};

/// TE-on minus TE-off, pairs matched on (fold, window, event_n), averaged
/// per (lengths, shape). Errors on an unmatched pair.
std::vector<UpliftRow> te_uplift(const ResultsStore& store);

struct EventNPoint {
  int event_n = 0;
  int fold_offset = 0;
  std::vector<int> lengths;
  double val_roc_auc = 0.0, val_pr_auc = 0.0;
  double test_roc_auc = 0.0, test_pr_auc = 0.0;
};

/// Projection of the event-count cells, sorted by (N, fold, lengths).
std::vector<EventNPoint> event_n_sweep(const ResultsStore& store);

/// Writes absolute_metrics.csv, league_table.csv, traffic_light.csv,
/// te_uplift.csv (when both TE flags are present), event_n_sweep.csv (when
/// event-count cells exist), failures.csv (when failures exist) and
/// index.json. Regeneration from an unchanged results directory is
/// byte-identical; no wall-clock data enters any report.
void write_reports(const ResultsStore& store, const WindowSpec& baseline,
                   const std::string& out_dir);

}  // namespace chronofeat
