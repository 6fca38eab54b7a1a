#include "chronofeat/evalreport.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <thread>
#include <tuple>
#include <unordered_map>

#include <json.hpp>

#include "chronofeat/common.hpp"
#include "chronofeat/csv.hpp"
#include "chronofeat/featurize.hpp"
#include "chronofeat/te.hpp"

namespace fs = std::filesystem;

namespace chronofeat {

// ---------------------------------------------------------------------------
// Grid configuration

void GridConfig::validate() const {
  if (folds.empty()) fail("grid: folds list is empty");
  for (int k : folds)
    if (k < 0) fail("grid: fold offset must be >= 0, got ", k);
  if (shapes.empty()) fail("grid: shapes list is empty");
  if (te_flags.empty()) fail("grid: te list is empty");
  if (event_n.empty()) fail("grid: event_n list is empty");
  for (int n : event_n)
    if (n < 1) fail("grid: event_n must be >= 1, got ", n);
  bool needs_lengths = false;
  for (WindowShape s : shapes) needs_lengths |= s != WindowShape::none;
  if (needs_lengths && lengths.empty()) fail("grid: lengths list is empty");
  for (const auto& tuple : lengths) {
    WindowSpec probe;
    probe.lengths = tuple;
    probe.validate();
  }
  if (entity_keys.empty()) fail("grid: entity_keys list is empty");
  learner.validate();
}

GridConfig default_grid() {
  GridConfig g;
  g.lengths = default_length_tuples();
  g.shapes = default_shapes();
  g.te_flags = {true, false};
  g.event_n = {kDefaultEventN};
  g.folds = {0, 1};
  g.entity_keys = default_entity_keys();
  return g;
}

namespace {

MetricKind parse_metric_kind(const std::string& name) {
  if (name == "roc_auc") return MetricKind::roc_auc;
  if (name == "pr_auc") return MetricKind::pr_auc;
  fail("unknown eval_metric '", name, "' (expected roc_auc or pr_auc)");
}

LearnerConfig learner_from_json(const nlohmann::json& j, const LearnerConfig& defaults) {
  LearnerConfig c = defaults;
  c.model = parse_model_kind(j.value("model", model_kind_name(c.model)));
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.l2_penalty = j.value("l2_penalty", c.l2_penalty);
  c.max_epochs = j.value("max_epochs", c.max_epochs);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.early_stopping_patience = j.value("early_stopping_patience", c.early_stopping_patience);
  c.eval_metric = parse_metric_kind(
      j.value("eval_metric", std::string(c.eval_metric == MetricKind::roc_auc ? "roc_auc"
                                                                              : "pr_auc")));
  c.seed = j.value("seed", c.seed);
  return c;
}

std::string lengths_str(const std::vector<int>& lengths) {
  std::string out;
  for (std::size_t i = 0; i < lengths.size(); ++i) {
    if (i) out += ',';
    out += num_str(static_cast<std::int64_t>(lengths[i]));
  }
  return out;
}

}  // namespace

GridConfig load_grid_config(const std::string& path, const LearnerConfig& learner_defaults) {
  std::ifstream in(path);
  if (!in) fail("cannot open ", path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    fail(path, ": invalid JSON: ", e.what());
  }
  GridConfig g = default_grid();
  g.learner = learner_defaults;
  if (j.contains("lengths")) {
    g.lengths.clear();
    for (const auto& tuple : j.at("lengths")) {
      std::vector<int> t;
      for (const auto& v : tuple) t.push_back(v.get<int>());
      g.lengths.push_back(std::move(t));
    }
  }
  if (j.contains("shapes")) {
    g.shapes.clear();
    for (const auto& s : j.at("shapes"))
      g.shapes.push_back(parse_window_shape(s.get<std::string>()));
  }
  if (j.contains("te")) {
    g.te_flags.clear();
    for (const auto& t : j.at("te")) {
      if (t.is_boolean()) {
        g.te_flags.push_back(t.get<bool>());
      } else {
        const std::string s = t.get<std::string>();
        if (s != "on" && s != "off") fail(path, ": te flag must be on/off, got '", s, "'");
        g.te_flags.push_back(s == "on");
      }
    }
  }
  if (j.contains("event_n")) {
    g.event_n.clear();
    for (const auto& n : j.at("event_n")) g.event_n.push_back(n.get<int>());
  }
  if (j.contains("folds")) {
    g.folds.clear();
    for (const auto& k : j.at("folds")) {
      // Offsets may be numeric (0, 1, ...) or labels ("A", "B", ...).
      if (k.is_string())
        g.folds.push_back(parse_fold_list(k.get<std::string>()).at(0));
      else
        g.folds.push_back(k.get<int>());
    }
  }
  if (j.contains("entity_keys")) {
    g.entity_keys.clear();
    for (const auto& k : j.at("entity_keys")) g.entity_keys.push_back(k.get<std::string>());
  }
  if (j.contains("learner")) g.learner = learner_from_json(j.at("learner"), g.learner);
  g.validate();
  return g;
}

// ---------------------------------------------------------------------------
// Cell enumeration

std::string CellSpec::id() const {
  std::string w = window.label();
  for (auto& ch : w) {
    if (ch == ':') ch = '_';
    if (ch == ',') ch = '-';
  }
  return cat(fold_label(fold_offset), "__", w, "__te-", te_on ? "on" : "off", "__n",
             static_cast<std::int64_t>(window.event_n));
}

std::vector<CellSpec> enumerate_cells(const GridConfig& grid) {
  grid.validate();
  std::vector<CellSpec> out;
  std::set<std::string> seen;
  // When no shape consumes lengths the tuple axis is vacuous.
  std::vector<std::vector<int>> tuples = grid.lengths;
  if (tuples.empty()) tuples.push_back({});
  for (const auto& tuple : tuples) {
    for (WindowShape shape : grid.shapes) {
      for (bool te : grid.te_flags) {
        for (int n : grid.event_n) {
          for (int fold : grid.folds) {
            CellSpec c;
            c.fold_offset = fold;
            c.te_on = te;
            c.window.shape = shape;
            if (shape != WindowShape::none) c.window.lengths = tuple;
            if (shape == WindowShape::event50) c.window.event_n = n;
            if (seen.insert(c.id()).second) out.push_back(std::move(c));
          }
        }
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Cell JSON round trip

namespace {

nlohmann::json cell_to_json(const CellResult& r) {
  nlohmann::json j;
  j["fold"] = r.spec.fold_offset;
  j["fold_label"] = fold_label(r.spec.fold_offset);
  j["window"] = r.spec.window.label();
  j["lengths"] = r.spec.window.lengths;
  j["shape"] = window_shape_name(r.spec.window.shape);
  j["te"] = r.spec.te_on;
  j["event_n"] = r.spec.window.event_n;
  j["gap_hours"] = r.spec.window.gap_hours;
  j["status"] = r.status;
  j["error"] = r.error;
  j["n_features"] = r.n_features;
  j["best_epoch"] = r.best_epoch;
  j["epochs_run"] = r.epochs_run;
  j["rows"] = {{"train", r.train_rows}, {"val", r.val_rows}, {"test", r.test_rows}};
  if (r.ok()) {
    j["metrics"] = {{"val", {{"roc_auc", r.val_roc_auc}, {"pr_auc", r.val_pr_auc}}},
                    {"test", {{"roc_auc", r.test_roc_auc}, {"pr_auc", r.test_pr_auc}}}};
  }
  return j;
}

CellResult cell_from_json(const nlohmann::json& j, const std::string& where) {
  CellResult r;
  try {
    r.spec.fold_offset = j.at("fold").get<int>();
    r.spec.window.lengths = j.at("lengths").get<std::vector<int>>();
    r.spec.window.shape = parse_window_shape(j.at("shape").get<std::string>());
    r.spec.window.event_n = j.at("event_n").get<int>();
    r.spec.window.gap_hours = j.at("gap_hours").get<int>();
    r.spec.te_on = j.at("te").get<bool>();
    r.status = j.at("status").get<std::string>();
    r.error = j.at("error").get<std::string>();
    r.n_features = j.at("n_features").get<std::int64_t>();
    r.best_epoch = j.at("best_epoch").get<int>();
    r.epochs_run = j.at("epochs_run").get<int>();
    r.train_rows = j.at("rows").at("train").get<std::int64_t>();
    r.val_rows = j.at("rows").at("val").get<std::int64_t>();
    r.test_rows = j.at("rows").at("test").get<std::int64_t>();
    if (r.ok()) {
      r.val_roc_auc = j.at("metrics").at("val").at("roc_auc").get<double>();
      r.val_pr_auc = j.at("metrics").at("val").at("pr_auc").get<double>();
      r.test_roc_auc = j.at("metrics").at("test").at("roc_auc").get<double>();
      r.test_pr_auc = j.at("metrics").at("test").at("pr_auc").get<double>();
    }
  } catch (const nlohmann::json::exception& e) {
    fail(where, ": malformed cell record: ", e.what());
  }
  return r;
}

void write_json_file(const nlohmann::json& j, const fs::path& path) {
  std::ofstream out(path);
  if (!out) fail("cannot write ", path.string());
  out << j.dump(2) << "\n";
}

nlohmann::json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open ", path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    fail(path.string(), ": invalid JSON: ", e.what());
  }
  return j;
}

void write_predictions_csv(const fs::path& path, const std::vector<std::uint64_t>& ids,
                           const std::vector<double>& scores) {
  std::ofstream out(path);
  if (!out) fail("cannot write ", path.string());
  out << "row_id,score\n";
  for (std::size_t i = 0; i < ids.size(); ++i)
    out << num_str(ids[i]) << ',' << num_str(scores[i]) << '\n';
}

void write_labels_csv(const fs::path& path, const std::vector<std::uint64_t>& ids,
                      const std::vector<std::uint8_t>& labels) {
  std::ofstream out(path);
  if (!out) fail("cannot write ", path.string());
  out << "row_id,label\n";
  for (std::size_t i = 0; i < ids.size(); ++i)
    out << num_str(ids[i]) << ',' << int(labels[i]) << '\n';
}

void read_labels_csv(const fs::path& path, std::vector<std::uint64_t>& ids,
                     std::vector<std::uint8_t>& labels) {
  std::ifstream in(path);
  if (!in) fail("cannot open ", path.string());
  CsvReader reader(in);
  std::vector<std::string> row;
  if (!reader.read_row(row) || row.size() != 2 || row[0] != "row_id" || row[1] != "label")
    fail(path.string(), ": expected header 'row_id,label'");
  while (reader.read_row(row)) {
    if (row.size() != 2) fail(path.string(), ":", reader.row_line(), ": expected 2 fields");
    ids.push_back(parse_uint64(row[0], cat(path.string(), ":", reader.row_line())));
    const std::int64_t l = parse_int64(row[1], cat(path.string(), ":", reader.row_line()));
    if (l != 0 && l != 1) fail(path.string(), ":", reader.row_line(), ": label must be 0/1");
    labels.push_back(static_cast<std::uint8_t>(l));
  }
}

// Scores reordered to the given id order; membership must match exactly.
std::vector<double> align_to_ids(const std::vector<std::uint64_t>& ids,
                                 const ExternalPredictions& preds, const std::string& what) {
  std::unordered_map<std::uint64_t, double> by_id;
  by_id.reserve(preds.row_ids.size());
  for (std::size_t i = 0; i < preds.row_ids.size(); ++i)
    if (!by_id.emplace(preds.row_ids[i], preds.scores[i]).second)
      fail(what, ": duplicate row_id ", preds.row_ids[i]);
  if (by_id.size() != ids.size())
    fail(what, ": ", by_id.size(), " predictions for ", ids.size(), " rows");
  std::vector<double> out;
  out.reserve(ids.size());
  for (std::uint64_t id : ids) {
    auto it = by_id.find(id);
    if (it == by_id.end()) fail(what, ": missing row_id ", id);
    out.push_back(it->second);
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Sweep execution

namespace {

struct FoldSlot {
  bool ok = false;
  FoldAssignment fold;
  std::string error;
};

CellResult compute_cell(const std::vector<ImpressionEvent>& events, const LogSchema& schema,
                        const FoldAssignment& fold, const CellSpec& spec,
                        const GridConfig& grid, const FeatureMatrix* te_cache,
                        const fs::path& cell_dir) {
  CellResult r;
  r.spec = spec;
  FeaturizeOptions options;
  options.entity_keys = grid.entity_keys;
  const FeatureMatrix matrix =
      featurize_fold(events, schema, fold, spec.window, spec.te_on, te_cache, options);
  const FeatureMatrix train = matrix.slice(Split::train);
  const FeatureMatrix val = matrix.slice(Split::val);
  const FeatureMatrix test = matrix.slice(Split::test);
  r.n_features = static_cast<std::int64_t>(matrix.n_cols());
  r.train_rows = static_cast<std::int64_t>(train.n_rows());
  r.val_rows = static_cast<std::int64_t>(val.n_rows());
  r.test_rows = static_cast<std::int64_t>(test.n_rows());

  const FittedModel model = fit(train, val, grid.learner);
  r.best_epoch = model.best_epoch;
  r.epochs_run = model.epochs_run;
  const std::vector<double> val_p = predict_proba(model, val);
  const std::vector<double> test_p = predict_proba(model, test);
  r.val_roc_auc = roc_auc(val_p, val.labels);
  r.val_pr_auc = pr_auc(val_p, val.labels);
  r.test_roc_auc = roc_auc(test_p, test.labels);
  r.test_pr_auc = pr_auc(test_p, test.labels);

  write_predictions_csv(cell_dir / "predictions_val.csv", val.row_ids, val_p);
  write_predictions_csv(cell_dir / "predictions_test.csv", test.row_ids, test_p);
  return r;
}

void write_results_csv(const fs::path& path, const std::vector<CellResult>& cells) {
  std::ofstream out(path);
  if (!out) fail("cannot write ", path.string());
  const std::vector<std::string> header{
      "cell_id",     "fold",       "window",     "te",          "event_n",
      "status",      "n_features", "best_epoch", "epochs_run",  "train_rows",
      "val_rows",    "test_rows",  "val_roc_auc", "val_pr_auc", "test_roc_auc",
      "test_pr_auc", "error"};
  write_csv_row(out, header);
  for (const auto& r : cells) {
    std::vector<std::string> row{
        r.spec.id(),
        fold_label(r.spec.fold_offset),
        r.spec.window.label(),
        r.spec.te_on ? "on" : "off",
        num_str(static_cast<std::int64_t>(r.spec.window.event_n)),
        r.status,
        num_str(r.n_features),
        num_str(static_cast<std::int64_t>(r.best_epoch)),
        num_str(static_cast<std::int64_t>(r.epochs_run)),
        num_str(r.train_rows),
        num_str(r.val_rows),
        num_str(r.test_rows),
        r.ok() ? num_str(r.val_roc_auc) : "",
        r.ok() ? num_str(r.val_pr_auc) : "",
        r.ok() ? num_str(r.test_roc_auc) : "",
        r.ok() ? num_str(r.test_pr_auc) : "",
        r.error};
    write_csv_row(out, row);
  }
}

}  // namespace

SweepOutcome run_sweep(const std::vector<ImpressionEvent>& events, const LogSchema& schema,
                       const GridConfig& grid, const std::string& out_dir, int jobs) {
  grid.validate();
  if (jobs < 1) fail("sweep: jobs must be >= 1, got ", jobs);
  if (grid.learner.model != ModelKind::logistic_sgd)
    fail("sweep drives the built-in learner; export matrices with `featurize` to use "
         "an external learner");
  for (std::size_t i = 1; i < events.size(); ++i)
    if (events[i].hour < events[i - 1].hour)
      fail("sweep input must be sorted by hour ascending (row ", i + 1, " goes back in time)");

  const std::vector<CellSpec> cells = enumerate_cells(grid);
  fs::create_directories(fs::path(out_dir) / "cells");

  // Folds and TE cache are shared read-only across cells.
  std::map<int, FoldSlot> folds;
  std::set<int> offsets(grid.folds.begin(), grid.folds.end());
  for (int k : offsets) {
    FoldSlot slot;
    try {
      slot.fold = build_fold(events, k);
      slot.ok = true;
    } catch (const std::exception& e) {
      slot.error = e.what();
    }
    folds.emplace(k, std::move(slot));
  }
  bool any_te = false;
  for (const auto& c : cells) any_te |= c.te_on;
  FeatureMatrix te_cache;
  if (any_te) te_cache = te_pass(events, schema);

  SweepOutcome outcome;
  outcome.cells.resize(cells.size());
  std::atomic<std::size_t> next{0};
  std::atomic<int> n_computed{0}, n_resumed{0};
  std::mutex log_mu;

  auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= cells.size()) break;
      const CellSpec& spec = cells[i];
      const fs::path cell_dir = fs::path(out_dir) / "cells" / spec.id();
      const fs::path cell_json = cell_dir / "cell.json";
      CellResult result;
      bool resumed = false;
      if (fs::exists(cell_json)) {
        try {
          result = cell_from_json(read_json_file(cell_json), cell_json.string());
          resumed = true;
        } catch (const std::exception&) {
          resumed = false;  // unreadable record: recompute it
        }
      }
      std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
      if (!resumed) {
        fs::create_directories(cell_dir);
        const FoldSlot& slot = folds.at(spec.fold_offset);
        if (!slot.ok) {
          result.spec = spec;
          result.status = "failed";
          result.error = slot.error;
        } else {
          try {
            result = compute_cell(events, schema, slot.fold, spec, grid,
                                  spec.te_on ? &te_cache : nullptr, cell_dir);
          } catch (const std::exception& e) {
            result = CellResult{};
            result.spec = spec;
            result.status = "failed";
            result.error = e.what();
          }
        }
        write_json_file(cell_to_json(result), cell_json);
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        nlohmann::json timing;
        timing["wall_seconds"] = secs;
        write_json_file(timing, cell_dir / "timing.json");
        n_computed.fetch_add(1);
      } else {
        n_resumed.fetch_add(1);
      }
      {
        std::lock_guard<std::mutex> lock(log_mu);
        std::string line = cat("[sweep] ", spec.id(), " ",
                               resumed ? "resumed" : result.ok() ? "ok" : "FAILED");
        if (result.ok())
          line += cat(" test_roc=", num_str(result.test_roc_auc));
        else if (!result.error.empty())
          line += cat(" (", result.error, ")");
        std::fputs((line + "\n").c_str(), stderr);
      }
      outcome.cells[i] = std::move(result);
    }
  };

  std::vector<std::thread> pool;
  for (int t = 1; t < jobs; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();

  outcome.n_computed = n_computed.load();
  outcome.n_resumed = n_resumed.load();
  for (const auto& r : outcome.cells) outcome.n_failed += r.ok() ? 0 : 1;

  // Per-fold label files give reports ground truth without rereading the log.
  for (const auto& [k, slot] : folds) {
    if (!slot.ok) continue;
    FoldLabels fl;
    for (const auto& ev : events) {
      const Split s = assign_split(ev, slot.fold);
      if (s == Split::val) {
        fl.val_ids.push_back(ev.row_id);
        fl.val_labels.push_back(ev.click);
      } else if (s == Split::test) {
        fl.test_ids.push_back(ev.row_id);
        fl.test_labels.push_back(ev.click);
      }
    }
    write_labels_csv(fs::path(out_dir) / cat("labels_val_", fold_label(k), ".csv"), fl.val_ids,
                     fl.val_labels);
    write_labels_csv(fs::path(out_dir) / cat("labels_test_", fold_label(k), ".csv"),
                     fl.test_ids, fl.test_labels);
  }

  nlohmann::json sweep_index;
  std::vector<std::string> ids;
  for (const auto& c : cells) ids.push_back(c.id());
  sweep_index["cells"] = ids;
  std::vector<int> built, broken;
  for (const auto& [k, slot] : folds) (slot.ok ? built : broken).push_back(k);
  sweep_index["folds"] = built;
  nlohmann::json fold_errors = nlohmann::json::object();
  for (int k : broken) fold_errors[fold_label(k)] = folds.at(k).error;
  sweep_index["fold_errors"] = fold_errors;
  sweep_index["entity_keys"] = grid.entity_keys;
  write_json_file(sweep_index, fs::path(out_dir) / "sweep.json");

  write_results_csv(fs::path(out_dir) / "results.csv", outcome.cells);
  return outcome;
}

// ---------------------------------------------------------------------------
// Result loading

ResultsStore load_results(const std::string& results_dir) {
  const fs::path root(results_dir);
  if (!fs::exists(root / "sweep.json"))
    fail(results_dir, " is not a sweep results directory (missing sweep.json)");
  const nlohmann::json sweep_index = read_json_file(root / "sweep.json");

  ResultsStore store;
  for (const auto& k : sweep_index.at("folds")) store.fold_offsets.push_back(k.get<int>());
  std::sort(store.fold_offsets.begin(), store.fold_offsets.end());
  for (int k : store.fold_offsets) {
    FoldLabels fl;
    read_labels_csv(root / cat("labels_val_", fold_label(k), ".csv"), fl.val_ids,
                    fl.val_labels);
    read_labels_csv(root / cat("labels_test_", fold_label(k), ".csv"), fl.test_ids,
                    fl.test_labels);
    store.labels.emplace(k, std::move(fl));
  }

  for (const auto& id_json : sweep_index.at("cells")) {
    const std::string id = id_json.get<std::string>();
    const fs::path cell_dir = root / "cells" / id;
    CellResult r = cell_from_json(read_json_file(cell_dir / "cell.json"),
                                  (cell_dir / "cell.json").string());
    if (!r.ok()) {
      store.failed.push_back(std::move(r));
      continue;
    }
    auto labels_it = store.labels.find(r.spec.fold_offset);
    if (labels_it == store.labels.end())
      fail(results_dir, ": cell ", id, " references fold ", fold_label(r.spec.fold_offset),
           " with no label files");
    LoadedCell cell;
    cell.val_scores =
        align_to_ids(labels_it->second.val_ids,
                     read_predictions_csv((cell_dir / "predictions_val.csv").string()),
                     cat(id, "/predictions_val.csv"));
    cell.test_scores =
        align_to_ids(labels_it->second.test_ids,
                     read_predictions_csv((cell_dir / "predictions_test.csv").string()),
                     cat(id, "/predictions_test.csv"));
    cell.result = std::move(r);
    store.cells.push_back(std::move(cell));
  }
  return store;
}

// ---------------------------------------------------------------------------
// Report tables

namespace {

// Grouping key for one specification across folds.
using SpecKey = std::tuple<std::string, int, bool>;  // (window label, event_n, te)

SpecKey spec_key(const CellSpec& s) {
  return {s.window.label(), s.window.event_n, s.te_on};
}

// ok cells indexed by (spec key, fold offset).
std::map<SpecKey, std::map<int, const LoadedCell*>> group_cells(const ResultsStore& store) {
  std::map<SpecKey, std::map<int, const LoadedCell*>> groups;
  for (const auto& cell : store.cells)
    groups[spec_key(cell.result.spec)][cell.result.spec.fold_offset] = &cell;
  return groups;
}

struct FoldPair {
  const std::vector<double>* a = nullptr;
  const std::vector<double>* b = nullptr;
  const std::vector<std::uint8_t>* labels = nullptr;
};

// Percentile bootstrap of the mean-over-folds paired test ROC AUC delta;
// per-(resample, fold) seeded streams keep it deterministic and
// parallel-safe. Single-class resamples are redrawn, as in bootstrap_ci.
BootstrapInterval bootstrap_mean_delta(const std::vector<FoldPair>& folds, int b_resamples,
                                       std::uint64_t seed) {
  constexpr int kMaxRetries = 100;
  std::vector<double> deltas;
  deltas.reserve(static_cast<std::size_t>(b_resamples));
  for (int b = 0; b < b_resamples; ++b) {
    double sum = 0.0;
    for (std::size_t f = 0; f < folds.size(); ++f) {
      const auto& fp = folds[f];
      const std::size_t n = fp.labels->size();
      Rng rng(splitmix64(seed ^ (0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(b + 1)) ^
                         (0xD1B54A32D192ED03ULL * static_cast<std::uint64_t>(f + 1))));
      std::vector<double> ra(n), rb(n);
      std::vector<std::uint8_t> rl(n);
      bool ok = false;
      for (int attempt = 0; attempt < kMaxRetries && !ok; ++attempt) {
        bool any_pos = false, any_neg = false;
        for (std::size_t i = 0; i < n; ++i) {
          const std::size_t idx = static_cast<std::size_t>(rng.uniform_int(n));
          ra[i] = (*fp.a)[idx];
          rb[i] = (*fp.b)[idx];
          rl[i] = (*fp.labels)[idx];
          (rl[i] ? any_pos : any_neg) = true;
        }
        if (any_pos && any_neg) {
          sum += roc_auc(ra, rl) - roc_auc(rb, rl);
          ok = true;
        }
      }
      if (!ok) fail("bootstrap resample stayed single-class after ", kMaxRetries, " retries");
    }
    deltas.push_back(sum / static_cast<double>(folds.size()));
  }
  std::sort(deltas.begin(), deltas.end());
  return {percentile_sorted(deltas, 0.025), percentile_sorted(deltas, 0.975)};
}

}  // namespace

std::vector<LeagueRow> league_table(const ResultsStore& store, const WindowSpec& baseline,
                                    int bootstrap_b, std::uint64_t bootstrap_seed) {
  baseline.validate();
  if (store.fold_offsets.empty()) fail("league table: no folds in results");
  const auto groups = group_cells(store);

  std::vector<LeagueRow> rows;
  for (const auto& [key, by_fold] : groups) {
    // Rank only specifications evaluated on every fold.
    if (by_fold.size() != store.fold_offsets.size()) continue;
    const bool te_on = std::get<2>(key);
    const SpecKey base_key{baseline.label(), baseline.event_n, te_on};
    auto base_it = groups.find(base_key);
    for (int k : store.fold_offsets) {
      if (base_it == groups.end() || !base_it->second.count(k))
        fail("league table: baseline ", baseline.label(), " (te ", te_on ? "on" : "off",
             ") missing for fold ", fold_label(k));
    }
    LeagueRow row;
    row.window = by_fold.begin()->second->result.spec.window;
    row.te_on = te_on;
    std::vector<FoldPair> pairs;
    for (int k : store.fold_offsets) {
      const LoadedCell* spec_cell = by_fold.at(k);
      const LoadedCell* base_cell = base_it->second.at(k);
      const FoldLabels& fl = store.labels.at(k);
      row.fold_deltas.push_back(roc_auc(spec_cell->test_scores, fl.test_labels) -
                                roc_auc(base_cell->test_scores, fl.test_labels));
      pairs.push_back({&spec_cell->test_scores, &base_cell->test_scores, &fl.test_labels});
    }
    double sum = 0.0;
    for (double d : row.fold_deltas) sum += d;
    row.mean_delta = sum / static_cast<double>(row.fold_deltas.size());
    row.ci = bootstrap_mean_delta(pairs, bootstrap_b, bootstrap_seed);
    rows.push_back(std::move(row));
  }
  std::sort(rows.begin(), rows.end(), [](const LeagueRow& a, const LeagueRow& b) {
    if (a.mean_delta != b.mean_delta) return a.mean_delta > b.mean_delta;
    return std::tuple(a.window.label(), a.window.event_n, a.te_on) <
           std::tuple(b.window.label(), b.window.event_n, b.te_on);
  });
  return rows;
}

std::vector<TrafficRow> traffic_light(const ResultsStore& store) {
  const auto groups = group_cells(store);

  // Candidate (lengths, shape, te) combinations; for the event-count shape
  // prefer the default N, otherwise the smallest available.
  std::map<std::tuple<std::vector<int>, std::string, bool>, const std::map<int, const LoadedCell*>*>
      chosen;
  std::map<std::tuple<std::vector<int>, std::string, bool>, int> chosen_n;
  for (const auto& [key, by_fold] : groups) {
    if (by_fold.size() != store.fold_offsets.size()) continue;
    const CellSpec& spec = by_fold.begin()->second->result.spec;
    if (spec.window.shape == WindowShape::trailing || spec.window.shape == WindowShape::none)
      continue;
    const std::tuple<std::vector<int>, std::string, bool> ckey{
        spec.window.lengths, window_shape_name(spec.window.shape), spec.te_on};
    const int n = spec.window.event_n;
    auto it = chosen_n.find(ckey);
    const bool take = it == chosen_n.end() ||
                      (n == kDefaultEventN) ||
                      (it->second != kDefaultEventN && n < it->second);
    if (take) {
      chosen_n[ckey] = n;
      chosen[ckey] = &by_fold;
    }
  }

  std::vector<TrafficRow> rows;
  for (const auto& [ckey, by_fold] : chosen) {
    const auto& [lengths, shape_name, te_on] = ckey;
    WindowSpec trailing_ref;
    trailing_ref.lengths = lengths;
    const SpecKey ref_key{trailing_ref.label(), kDefaultEventN, te_on};
    auto ref_it = groups.find(ref_key);
    if (ref_it == groups.end() || ref_it->second.size() != store.fold_offsets.size())
      fail("traffic light: missing trailing reference ", trailing_ref.label(), " (te ",
           te_on ? "on" : "off", ")");
    double sum = 0.0;
    for (int k : store.fold_offsets) {
      const FoldLabels& fl = store.labels.at(k);
      sum += roc_auc(by_fold->at(k)->test_scores, fl.test_labels) -
             roc_auc(ref_it->second.at(k)->test_scores, fl.test_labels);
    }
    TrafficRow row;
    row.lengths = lengths;
    row.shape = parse_window_shape(shape_name);
    row.te_on = te_on;
    row.mean_delta = sum / static_cast<double>(store.fold_offsets.size());
    constexpr double kSignTolerance = 1e-5;
    row.sign = row.mean_delta > kSignTolerance ? "+"
               : row.mean_delta < -kSignTolerance ? "-"
                                                  : "0";
    rows.push_back(std::move(row));
  }
  return rows;  // std::map iteration already gives a deterministic order
}

std::vector<UpliftRow> te_uplift(const ResultsStore& store) {
  // Pairs matched on (fold, window, event_n) with the TE flag flipped.
  std::map<std::tuple<std::string, int, int>, const LoadedCell*> on_cells, off_cells;
  for (const auto& cell : store.cells) {
    const CellSpec& s = cell.result.spec;
    const std::tuple<std::string, int, int> key{s.window.label(), s.window.event_n,
                                                s.fold_offset};
    (s.te_on ? on_cells : off_cells)[key] = &cell;
  }
  std::map<std::tuple<std::vector<int>, std::string>, UpliftRow> grouped;
  auto match = [&](const auto& source, const auto& other, const char* missing) {
    for (const auto& [key, cell] : source) {
      if (!other.count(key))
        fail("te uplift: no ", missing, " counterpart for ", cell->result.spec.id());
    }
  };
  match(on_cells, off_cells, "te-off");
  match(off_cells, on_cells, "te-on");
  for (const auto& [key, on_cell] : on_cells) {
    const LoadedCell* off_cell = off_cells.at(key);
    const int fold = std::get<2>(key);
    const FoldLabels& fl = store.labels.at(fold);
    const double roc_delta = roc_auc(on_cell->test_scores, fl.test_labels) -
                             roc_auc(off_cell->test_scores, fl.test_labels);
    const double pr_delta = pr_auc(on_cell->test_scores, fl.test_labels) -
                            pr_auc(off_cell->test_scores, fl.test_labels);
    const CellSpec& s = on_cell->result.spec;
    UpliftRow& row = grouped[{s.window.lengths, window_shape_name(s.window.shape)}];
    row.lengths = s.window.lengths;
    row.shape = s.window.shape;
    row.n_pairs += 1;
    row.mean_test_roc_delta += roc_delta;
    row.mean_test_pr_delta += pr_delta;
  }
  std::vector<UpliftRow> rows;
  for (auto& [key, row] : grouped) {
    row.mean_test_roc_delta /= row.n_pairs;
    row.mean_test_pr_delta /= row.n_pairs;
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<EventNPoint> event_n_sweep(const ResultsStore& store) {
  std::vector<EventNPoint> points;
  for (const auto& cell : store.cells) {
    const CellSpec& s = cell.result.spec;
    if (s.window.shape != WindowShape::event50) continue;
    EventNPoint p;
    p.event_n = s.window.event_n;
    p.fold_offset = s.fold_offset;
    p.lengths = s.window.lengths;
    p.val_roc_auc = cell.result.val_roc_auc;
    p.val_pr_auc = cell.result.val_pr_auc;
    p.test_roc_auc = cell.result.test_roc_auc;
    p.test_pr_auc = cell.result.test_pr_auc;
    points.push_back(std::move(p));
  }
  std::sort(points.begin(), points.end(), [](const EventNPoint& a, const EventNPoint& b) {
    return std::tuple(a.event_n, a.fold_offset, a.lengths) <
           std::tuple(b.event_n, b.fold_offset, b.lengths);
  });
  return points;
}

// ---------------------------------------------------------------------------
// Report files

void write_reports(const ResultsStore& store, const WindowSpec& baseline,
                   const std::string& out_dir) {
  fs::create_directories(out_dir);
  std::vector<std::string> artifacts;

  {
    std::ofstream out(fs::path(out_dir) / "absolute_metrics.csv");
    if (!out) fail("cannot write ", out_dir, "/absolute_metrics.csv");
    write_csv_row(out, {"fold", "window", "te", "event_n", "n_features", "best_epoch",
                        "val_roc_auc", "val_pr_auc", "test_roc_auc", "test_pr_auc"});
    for (const auto& cell : store.cells) {
      const CellResult& r = cell.result;
      write_csv_row(out, {fold_label(r.spec.fold_offset), r.spec.window.label(),
                          r.spec.te_on ? "on" : "off",
                          num_str(static_cast<std::int64_t>(r.spec.window.event_n)),
                          num_str(r.n_features),
                          num_str(static_cast<std::int64_t>(r.best_epoch)),
                          num_str(r.val_roc_auc), num_str(r.val_pr_auc),
                          num_str(r.test_roc_auc), num_str(r.test_pr_auc)});
    }
    artifacts.push_back("absolute_metrics.csv");
  }

  {
    const std::vector<LeagueRow> rows = league_table(store, baseline);
    std::ofstream out(fs::path(out_dir) / "league_table.csv");
    if (!out) fail("cannot write ", out_dir, "/league_table.csv");
    std::vector<std::string> header{"rank", "window", "te", "event_n"};
    for (int k : store.fold_offsets) header.push_back(cat("delta_", fold_label(k)));
    header.insert(header.end(), {"mean_delta", "ci_low", "ci_high"});
    write_csv_row(out, header);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const LeagueRow& row = rows[i];
      std::vector<std::string> fields{num_str(static_cast<std::int64_t>(i + 1)),
                                      row.window.label(), row.te_on ? "on" : "off",
                                      num_str(static_cast<std::int64_t>(row.window.event_n))};
      for (double d : row.fold_deltas) fields.push_back(num_str(d));
      fields.push_back(num_str(row.mean_delta));
      fields.push_back(num_str(row.ci.low));
      fields.push_back(num_str(row.ci.high));
      write_csv_row(out, fields);
    }
    artifacts.push_back("league_table.csv");
  }

  {
    const std::vector<TrafficRow> rows = traffic_light(store);
    std::ofstream out(fs::path(out_dir) / "traffic_light.csv");
    if (!out) fail("cannot write ", out_dir, "/traffic_light.csv");
    write_csv_row(out, {"lengths", "shape", "te", "mean_test_roc_delta", "sign"});
    for (const auto& row : rows)
      write_csv_row(out, {lengths_str(row.lengths), window_shape_name(row.shape),
                          row.te_on ? "on" : "off", num_str(row.mean_delta), row.sign});
    artifacts.push_back("traffic_light.csv");
  }

  bool any_on = false, any_off = false;
  for (const auto& cell : store.cells) (cell.result.spec.te_on ? any_on : any_off) = true;
  if (any_on && any_off) {
    const std::vector<UpliftRow> rows = te_uplift(store);
    std::ofstream out(fs::path(out_dir) / "te_uplift.csv");
    if (!out) fail("cannot write ", out_dir, "/te_uplift.csv");
    write_csv_row(out, {"lengths", "shape", "n_pairs", "mean_test_roc_uplift",
                        "mean_test_pr_uplift"});
    for (const auto& row : rows)
      write_csv_row(out, {lengths_str(row.lengths), window_shape_name(row.shape),
                          num_str(static_cast<std::int64_t>(row.n_pairs)),
                          num_str(row.mean_test_roc_delta), num_str(row.mean_test_pr_delta)});
    artifacts.push_back("te_uplift.csv");
  }

  bool any_event = false;
  for (const auto& cell : store.cells)
    any_event |= cell.result.spec.window.shape == WindowShape::event50;
  if (any_event) {
    const std::vector<EventNPoint> points = event_n_sweep(store);
    std::ofstream out(fs::path(out_dir) / "event_n_sweep.csv");
    if (!out) fail("cannot write ", out_dir, "/event_n_sweep.csv");
    write_csv_row(out, {"event_n", "fold", "lengths", "val_roc_auc", "val_pr_auc",
                        "test_roc_auc", "test_pr_auc"});
    for (const auto& p : points)
      write_csv_row(out, {num_str(static_cast<std::int64_t>(p.event_n)),
                          fold_label(p.fold_offset), lengths_str(p.lengths),
                          num_str(p.val_roc_auc), num_str(p.val_pr_auc),
                          num_str(p.test_roc_auc), num_str(p.test_pr_auc)});
    artifacts.push_back("event_n_sweep.csv");
  }

  if (!store.failed.empty()) {
    std::ofstream out(fs::path(out_dir) / "failures.csv");
    if (!out) fail("cannot write ", out_dir, "/failures.csv");
    write_csv_row(out, {"cell_id", "error"});
    for (const auto& r : store.failed) write_csv_row(out, {r.spec.id(), r.error});
    artifacts.push_back("failures.csv");
  }

  nlohmann::json index;
  index["artifacts"] = artifacts;
  index["baseline"] = baseline.label();
  index["ci_method"] =
      cat("paired percentile bootstrap over test rows, B=",
          static_cast<std::int64_t>(kDefaultBootstrapB), ", seed=",
          static_cast<std::int64_t>(kDefaultBootstrapSeed),
          " (interval construction is this harness's choice)");
  std::vector<std::string> fold_names;
  for (int k : store.fold_offsets) fold_names.push_back(fold_label(k));
  index["folds"] = fold_names;
  index["n_cells_ok"] = store.cells.size();
  index["n_cells_failed"] = store.failed.size();
  write_json_file(index, fs::path(out_dir) / "index.json");
}

}  // namespace chronofeat
