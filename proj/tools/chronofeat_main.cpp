#include <sys/resource.h>

#include <charconv>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <unordered_map>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "chronofeat/common.hpp"
#include "chronofeat/csv.hpp"
#include "chronofeat/evalreport.hpp"
#include "chronofeat/featurize.hpp"
#include "chronofeat/folds.hpp"
#include "chronofeat/ingest.hpp"
#include "chronofeat/learner.hpp"
#include "chronofeat/metrics.hpp"
#include "chronofeat/synthgen.hpp"
#include "chronofeat/te.hpp"

namespace fs = std::filesystem;
using namespace chronofeat;

namespace {

std::string hex_u64(std::uint64_t v) {
  char buf[16];
  auto res = std::to_chars(buf, buf + sizeof(buf), v, 16);
  return std::string(buf, res.ptr);
}

void log_line(const std::string& s) { std::fputs((s + "\n").c_str(), stderr); }

// ---------------------------------------------------------------------------
// Run manifest: one per producing run, in the artifact directory (or as a
// .manifest.json sidecar for single-file outputs). Carries the resolved
// configuration and input digests; timing fields are the only part allowed
// to differ between identical reruns.

class Manifest {
 public:
  explicit Manifest(std::string command) : start_(std::chrono::steady_clock::now()) {
    j_["command"] = std::move(command);
    j_["tool_version"] = kToolVersion;
    j_["config"] = nlohmann::json::object();
    j_["inputs"] = nlohmann::json::object();
  }

  nlohmann::json& config() { return j_["config"]; }

  void add_input(const std::string& path) {
    j_["inputs"][path] = cat("fnv1a64:", hex_u64(fnv1a64_file(path)));
  }

  void write_for_dir(const std::string& dir) { write(fs::path(dir) / "run_manifest.json"); }
  void write_for_file(const std::string& file) { write(fs::path(file + ".manifest.json")); }

 private:
  void write(const fs::path& path) {
    j_["wall_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    rusage ru{};
    getrusage(RUSAGE_SELF, &ru);
    j_["peak_rss_kb"] = static_cast<std::int64_t>(ru.ru_maxrss);
    std::ofstream out(path);
    if (!out) fail("cannot write ", path.string());
    out << j_.dump(2) << "\n";
  }

  std::chrono::steady_clock::time_point start_;
  nlohmann::json j_;
};

// Seed precedence: flag > config file > CHRONOFEAT_SEED > built-in default.
std::uint64_t global_seed_default(std::uint64_t builtin) {
  const char* env = std::getenv("CHRONOFEAT_SEED");
  if (env == nullptr || *env == '\0') return builtin;
  return parse_uint64(env, "CHRONOFEAT_SEED");
}

LogSchema resolve_schema(const std::string& schema_path, const std::string& input) {
  if (!schema_path.empty()) return load_schema_json(schema_path);
  std::ifstream in(input, std::ios::binary);
  if (!in) fail("cannot open input file: ", input);
  CsvReader reader(in);
  std::vector<std::string> header;
  if (!reader.read_row(header)) fail(input, ": empty input, no header");
  return schema_from_header(header);
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::string item;
  for (char c : text) {
    if (c == ',') {
      out.push_back(item);
      item.clear();
    } else {
      item += c;
    }
  }
  if (!item.empty() || !out.empty()) out.push_back(item);
  return out;
}

std::vector<int> parse_int_list(const std::string& text, const std::string& what) {
  std::vector<int> out;
  for (const auto& item : split_list(text))
    out.push_back(static_cast<int>(parse_int64(item, what)));
  return out;
}

bool parse_on_off(const std::string& text, const std::string& what) {
  if (text == "on") return true;
  if (text == "off") return false;
  fail(what, " must be 'on' or 'off', got '", text, "'");
}

FeatureMatrix load_matrix_any(const std::string& path) {
  if (path.size() >= 4 && path.substr(path.size() - 4) == ".csv") {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail("cannot open ", path);
    return read_matrix_csv(in);
  }
  return read_matrix(path);
}

int single_fold_offset(const std::string& text) {
  const std::vector<int> folds = parse_fold_list(text);
  if (folds.size() != 1) fail("expected a single fold id, got '", text, "'");
  return folds[0];
}

nlohmann::json schema_to_json(const LogSchema& s) {
  return {{"id_column", s.id_column},
          {"label_column", s.label_column},
          {"hour_column", s.hour_column},
          {"categorical_columns", s.categorical_columns}};
}

nlohmann::json grid_to_json(const GridConfig& g) {
  nlohmann::json j;
  j["lengths"] = g.lengths;
  std::vector<std::string> shapes;
  for (WindowShape s : g.shapes) shapes.push_back(window_shape_name(s));
  j["shapes"] = shapes;
  j["te"] = g.te_flags;
  j["event_n"] = g.event_n;
  j["folds"] = g.folds;
  j["entity_keys"] = g.entity_keys;
  j["learner"] = {{"model", model_kind_name(g.learner.model)},
                  {"learning_rate", g.learner.learning_rate},
                  {"l2_penalty", g.learner.l2_penalty},
                  {"max_epochs", g.learner.max_epochs},
                  {"batch_size", g.learner.batch_size},
                  {"early_stopping_patience", g.learner.early_stopping_patience},
                  {"eval_metric",
                   g.learner.eval_metric == MetricKind::roc_auc ? "roc_auc" : "pr_auc"},
                  {"seed", g.learner.seed}};
  return j;
}

// ---------------------------------------------------------------------------
// Subcommands

struct SampleOpts {
  std::string input, output, id_column = "id";
  int rate = 10;
};

void cmd_sample(const SampleOpts& o) {
  Manifest manifest("sample");
  std::ifstream in(o.input, std::ios::binary);
  if (!in) fail("cannot open input file: ", o.input);
  std::ofstream out(o.output, std::ios::binary);
  if (!out) fail("cannot write ", o.output);
  CsvReader reader(in);
  std::vector<std::string> row;
  if (!reader.read_row(row)) fail(o.input, ": empty input, no header");
  std::size_t id_at = row.size();
  for (std::size_t i = 0; i < row.size(); ++i)
    if (row[i] == o.id_column) id_at = i;
  if (id_at == row.size()) fail("missing column '", o.id_column, "' in header");
  const std::size_t width = row.size();
  write_csv_row(out, row);
  std::int64_t total = 0, kept = 0;
  while (reader.read_row(row)) {
    if (row.size() != width)
      fail("malformed row at line ", reader.row_line(), ": expected ", width, " fields, got ",
           row.size());
    ++total;
    // Membership hashes the id field's exact text (decimal for numeric ids).
    if (fnv1a64(row[id_at]) % 100 < static_cast<std::uint64_t>(o.rate)) {
      write_csv_row(out, row);
      ++kept;
    }
  }
  log_line(cat("[sample] kept ", kept, " of ", total, " rows at rate ", o.rate, "%"));
  manifest.config() = {{"input", o.input},
                       {"output", o.output},
                       {"rate", o.rate},
                       {"id_column", o.id_column}};
  manifest.add_input(o.input);
  manifest.write_for_file(o.output);
}

struct StatsOpts {
  std::string input, out, schema;
};

void cmd_stats(const StatsOpts& o) {
  Manifest manifest("stats");
  const LogSchema schema = resolve_schema(o.schema, o.input);
  const std::vector<ImpressionEvent> events = parse_log_file(o.input, schema);
  const LogStats stats = log_stats(events);
  std::ofstream out(o.out, std::ios::binary);
  if (!out) fail("cannot write ", o.out);
  write_stats_csv(out, stats);
  log_line(cat("[stats] ", static_cast<std::int64_t>(events.size()), " rows over ",
               static_cast<std::int64_t>(stats.days.size()), " days"));
  if (stats.last_day_partial)
    log_line(cat("[stats] warning: last day ", format_day(day_of_hour(stats.last_hour)),
                 " is partial (no row in its final hour); splits still use it as day D"));
  manifest.config() = {{"input", o.input}, {"out", o.out}, {"schema", schema_to_json(schema)}};
  manifest.add_input(o.input);
  manifest.write_for_file(o.out);
}

struct SplitsOpts {
  std::string input, folds = "A,B", report, schema, sample_label;
};

void cmd_splits(const SplitsOpts& o) {
  Manifest manifest("splits");
  const LogSchema schema = resolve_schema(o.schema, o.input);
  const std::vector<ImpressionEvent> events = parse_log_file(o.input, schema);
  std::vector<FoldAssignment> folds;
  for (int k : parse_fold_list(o.folds)) folds.push_back(build_fold(events, k));
  if (!folds.empty() && folds.front().last_day_partial)
    log_line("[splits] warning: the last day is partial (no row in its final hour); it is still day D");
  const std::string label =
      o.sample_label.empty() ? fs::path(o.input).stem().string() : o.sample_label;
  std::ofstream out(o.report, std::ios::binary);
  if (!out) fail("cannot write ", o.report);
  write_splits_report(out, folds, label);
  log_line(cat("[splits] wrote ", static_cast<std::int64_t>(folds.size()), " folds to ",
               o.report));
  manifest.config() = {{"input", o.input},
                       {"folds", o.folds},
                       {"report", o.report},
                       {"sample_label", label}};
  manifest.add_input(o.input);
  manifest.write_for_file(o.report);
}

struct TeOpts {
  std::string input, schema, out;
};

void cmd_te(const TeOpts& o) {
  Manifest manifest("te");
  const LogSchema schema = resolve_schema(o.schema, o.input);
  const std::vector<ImpressionEvent> events = parse_log_file(o.input, schema);
  const FeatureMatrix cache = te_pass(events, schema);
  if (o.out.size() >= 4 && o.out.substr(o.out.size() - 4) == ".csv")
    write_matrix_csv_file(cache, o.out);
  else
    write_matrix(cache, o.out);
  log_line(cat("[te] ", cache.n_rows(), " rows x ", cache.n_cols(), " columns -> ", o.out));
  manifest.config() = {{"input", o.input}, {"out", o.out}, {"schema", schema_to_json(schema)}};
  manifest.add_input(o.input);
  manifest.write_for_file(o.out);
}

struct FeaturizeOpts {
  std::string input, schema, fold = "A", lengths = "1,6,24,48,168", shape = "trailing";
  std::string te = "on", te_cache, out, entity_keys;
  int event_n = kDefaultEventN;
};

void cmd_featurize(const FeaturizeOpts& o) {
  Manifest manifest("featurize");
  const LogSchema schema = resolve_schema(o.schema, o.input);
  const std::vector<ImpressionEvent> events = parse_log_file(o.input, schema);
  const int offset = single_fold_offset(o.fold);
  const FoldAssignment fold = build_fold(events, offset);

  WindowSpec spec;
  spec.shape = parse_window_shape(o.shape);
  if (spec.shape != WindowShape::none) {
    spec.lengths = parse_int_list(o.lengths, "--lengths");
    spec.event_n = o.event_n;
  }
  const bool te_on = parse_on_off(o.te, "--te");

  FeatureMatrix te_cache;
  const FeatureMatrix* cache = nullptr;
  if (te_on) {
    if (!o.te_cache.empty()) {
      te_cache = load_matrix_any(o.te_cache);
      manifest.add_input(o.te_cache);
    } else {
      log_line("[featurize] no --te-cache given; computing the encoding pass in-process");
      te_cache = te_pass(events, schema);
    }
    cache = &te_cache;
  }

  FeaturizeOptions options;
  if (!o.entity_keys.empty()) options.entity_keys = split_list(o.entity_keys);
  const FeatureMatrix matrix =
      featurize_fold(events, schema, fold, spec, te_on, cache, options);
  write_external_dir(matrix.slice(Split::train), matrix.slice(Split::val),
                     matrix.slice(Split::test), o.out);
  log_line(cat("[featurize] fold ", fold.fold_id, " ", spec.label(), " te=", o.te, ": ",
               matrix.n_rows(), " rows x ", matrix.n_cols(), " features -> ", o.out));
  manifest.config() = {{"input", o.input},          {"fold", fold.fold_id},
                       {"window", spec.label()},    {"lengths", spec.lengths},
                       {"shape", o.shape},          {"te", te_on},
                       {"event_n", spec.event_n},   {"te_cache", o.te_cache},
                       {"entity_keys", options.entity_keys},
                       {"schema", schema_to_json(schema)}};
  manifest.add_input(o.input);
  manifest.write_for_dir(o.out);
}

struct SynthOpts {
  std::string config, out, probs;
  std::uint64_t seed = 0;
  bool seed_set = false;
};

void cmd_synth(const SynthOpts& o) {
  Manifest manifest("synth");
  SynthConfig config = load_synth_config(o.config, global_seed_default(14));
  if (o.seed_set) config.seed = o.seed;
  const SynthResult result = generate(config);
  std::ofstream out(o.out, std::ios::binary);
  if (!out) fail("cannot write ", o.out);
  write_log(out, result.events, result.schema);
  if (!o.probs.empty()) {
    std::ofstream probs(o.probs, std::ios::binary);
    if (!probs) fail("cannot write ", o.probs);
    probs << "row_id,true_prob\n";
    for (std::size_t i = 0; i < result.events.size(); ++i)
      probs << num_str(result.events[i].row_id) << ',' << num_str(result.true_probs[i])
            << '\n';
  }
  log_line(cat("[synth] ", static_cast<std::int64_t>(result.events.size()), " rows over ",
               config.n_days, " days (clamped ", result.clamp_count, ") -> ", o.out));
  manifest.config() = {{"config_file", o.config},
                       {"out", o.out},
                       {"seed", config.seed},
                       {"n_days", config.n_days},
                       {"clamp_count", result.clamp_count}};
  manifest.add_input(o.config);
  manifest.write_for_file(o.out);
}

struct SweepOpts {
  std::string input, grid, out, schema;
  int jobs = 1;
  std::uint64_t seed = 0;
  bool seed_set = false;
};

void cmd_sweep(const SweepOpts& o) {
  Manifest manifest("sweep");
  const LogSchema schema = resolve_schema(o.schema, o.input);
  const std::vector<ImpressionEvent> events = parse_log_file(o.input, schema);
  LearnerConfig defaults;
  defaults.seed = global_seed_default(defaults.seed);
  GridConfig grid = load_grid_config(o.grid, defaults);
  if (o.seed_set) grid.learner.seed = o.seed;
  const SweepOutcome outcome = run_sweep(events, schema, grid, o.out, o.jobs);
  log_line(cat("[sweep] ", static_cast<std::int64_t>(outcome.cells.size()), " cells: ",
               outcome.n_computed, " computed, ", outcome.n_resumed, " resumed, ",
               outcome.n_failed, " failed"));
  manifest.config() = {{"input", o.input},
                       {"grid_file", o.grid},
                       {"jobs", o.jobs},
                       {"grid", grid_to_json(grid)},
                       {"schema", schema_to_json(schema)}};
  manifest.add_input(o.input);
  manifest.add_input(o.grid);
  manifest.write_for_dir(o.out);
}

struct EvalOpts {
  std::string pred, labels, out;
};

void cmd_eval(const EvalOpts& o) {
  Manifest manifest("eval");
  const ExternalPredictions preds = read_predictions_csv(o.pred);

  std::ifstream in(o.labels, std::ios::binary);
  if (!in) fail("cannot open ", o.labels);
  CsvReader reader(in);
  std::vector<std::string> row;
  if (!reader.read_row(row) || row.size() != 2 || row[0] != "row_id" || row[1] != "label")
    fail(o.labels, ": expected header 'row_id,label'");
  std::vector<std::uint64_t> ids;
  std::vector<std::uint8_t> labels;
  while (reader.read_row(row)) {
    if (row.size() != 2) fail(o.labels, ":", reader.row_line(), ": expected 2 fields");
    ids.push_back(parse_uint64(row[0], cat(o.labels, ":", reader.row_line())));
    const std::int64_t l = parse_int64(row[1], cat(o.labels, ":", reader.row_line()));
    if (l != 0 && l != 1) fail(o.labels, ":", reader.row_line(), ": label must be 0/1");
    labels.push_back(static_cast<std::uint8_t>(l));
  }

  std::unordered_map<std::uint64_t, double> by_id;
  for (std::size_t i = 0; i < preds.row_ids.size(); ++i)
    if (!by_id.emplace(preds.row_ids[i], preds.scores[i]).second)
      fail(o.pred, ": duplicate row_id ", preds.row_ids[i]);
  if (by_id.size() != ids.size())
    fail(o.pred, ": ", by_id.size(), " predictions for ", ids.size(), " labeled rows");
  std::vector<double> scores;
  scores.reserve(ids.size());
  for (std::uint64_t id : ids) {
    auto it = by_id.find(id);
    if (it == by_id.end()) fail(o.pred, ": missing row_id ", id);
    scores.push_back(it->second);
  }

  const MetricResult r = compute_metrics(scores, labels);
  nlohmann::json j = {{"n_rows", ids.size()},
                      {"n_pos", r.n_pos},
                      {"n_neg", r.n_neg},
                      {"roc_auc", r.roc_auc},
                      {"pr_auc", r.pr_auc}};
  std::ofstream out(o.out);
  if (!out) fail("cannot write ", o.out);
  out << j.dump(2) << "\n";
  log_line(cat("[eval] roc_auc=", num_str(r.roc_auc), " pr_auc=", num_str(r.pr_auc), " on ",
               static_cast<std::int64_t>(ids.size()), " rows"));
  manifest.config() = {{"pred", o.pred}, {"labels", o.labels}, {"out", o.out}};
  manifest.add_input(o.pred);
  manifest.add_input(o.labels);
  manifest.write_for_file(o.out);
}

struct ReportOpts {
  std::string results, baseline = "trailing:1,6,24,48,168", out;
};

void cmd_report(const ReportOpts& o) {
  Manifest manifest("report");
  const ResultsStore store = load_results(o.results);
  const WindowSpec baseline = parse_window_spec(o.baseline);
  write_reports(store, baseline, o.out);
  log_line(cat("[report] ", static_cast<std::int64_t>(store.cells.size()), " ok cells, ",
               static_cast<std::int64_t>(store.failed.size()), " failed -> ", o.out));
  manifest.config() = {{"results", o.results},
                       {"baseline", baseline.label()},
                       {"bootstrap_b", kDefaultBootstrapB},
                       {"bootstrap_seed", kDefaultBootstrapSeed}};
  manifest.add_input((fs::path(o.results) / "sweep.json").string());
  manifest.add_input((fs::path(o.results) / "results.csv").string());
  manifest.write_for_dir(o.out);
}

struct EdaOpts {
  std::string input, columns, out, schema;
};

void cmd_eda(const EdaOpts& o) {
  Manifest manifest("eda");
  const LogSchema schema = resolve_schema(o.schema, o.input);
  const std::vector<ImpressionEvent> events = parse_log_file(o.input, schema);
  const std::vector<std::string> columns =
      o.columns.empty() ? schema.categorical_columns : split_list(o.columns);
  fs::create_directories(o.out);

  {
    std::ofstream out(fs::path(o.out) / "ctr_by_day.csv", std::ios::binary);
    if (!out) fail("cannot write ", o.out, "/ctr_by_day.csv");
    out << "day,n_rows,n_clicks,ctr\n";
    for (const auto& d : eda_ctr_by_day(events))
      out << format_day(d.day) << ',' << num_str(d.n_rows) << ',' << num_str(d.n_clicks)
          << ',' << num_str(d.ctr) << '\n';
  }
  {
    std::ofstream out(fs::path(o.out) / "unseen_rate.csv", std::ios::binary);
    if (!out) fail("cannot write ", o.out, "/unseen_rate.csv");
    out << "day,column,n_rows,n_unseen,unseen_rate\n";
    for (const auto& u : eda_unseen_rate(events, schema, columns))
      out << format_day(u.day) << ',' << csv_field(u.column) << ',' << num_str(u.n_rows)
          << ',' << num_str(u.n_unseen) << ',' << num_str(u.unseen_rate) << '\n';
  }
  log_line(cat("[eda] ", static_cast<std::int64_t>(events.size()), " rows, ",
               static_cast<std::int64_t>(columns.size()), " columns -> ", o.out));
  manifest.config() = {{"input", o.input}, {"columns", columns}};
  manifest.add_input(o.input);
  manifest.write_for_dir(o.out);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "chronofeat: leakage-safe temporal feature engineering and benchmark harness"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  SampleOpts sample_opts;
  auto* sample = app.add_subcommand("sample", "Deterministic hash-sample of a log CSV");
  sample->add_option("--input", sample_opts.input, "Input CSV path")->required();
  sample->add_option("--rate", sample_opts.rate, "Keep percentage in [0,100]")
      ->required()
      ->check(CLI::Range(0, 100));
  sample->add_option("--id-column", sample_opts.id_column, "Column hashed for membership");
  sample->add_option("--output", sample_opts.output, "Output CSV path")->required();
  sample->callback([&] { cmd_sample(sample_opts); });

  StatsOpts stats_opts;
  auto* stats = app.add_subcommand("stats", "Per-day row counts and click rates");
  stats->add_option("--input", stats_opts.input, "Input log CSV")->required();
  stats->add_option("--out", stats_opts.out, "Output stats CSV")->required();
  stats->add_option("--schema", stats_opts.schema, "Schema JSON (default: from header)");
  stats->callback([&] { cmd_stats(stats_opts); });

  SplitsOpts splits_opts;
  auto* splits = app.add_subcommand("splits", "Rolling-tail out-of-time fold report");
  splits->add_option("--input", splits_opts.input, "Input log CSV")->required();
  splits->add_option("--folds", splits_opts.folds, "Fold list, e.g. A,B or 0,1");
  splits->add_option("--report", splits_opts.report, "Output report CSV")->required();
  splits->add_option("--schema", splits_opts.schema, "Schema JSON (default: from header)");
  splits->add_option("--sample-label", splits_opts.sample_label,
                     "Sample tag in the report (default: input file stem)");
  splits->callback([&] { cmd_splits(splits_opts); });

  TeOpts te_opts;
  auto* te = app.add_subcommand("te", "Build the target-encoding feature cache");
  te->add_option("--input", te_opts.input, "Input log CSV (sorted by hour)")->required();
  te->add_option("--schema", te_opts.schema, "Schema JSON (default: from header)");
  te->add_option("--out", te_opts.out, "Cache path (.fmx binary, or .csv)")->required();
  te->callback([&] { cmd_te(te_opts); });

  FeaturizeOpts feat_opts;
  auto* featurize =
      app.add_subcommand("featurize", "Assemble per-fold train/val/test feature matrices");
  featurize->add_option("--input", feat_opts.input, "Input log CSV (sorted by hour)")
      ->required();
  featurize->add_option("--fold", feat_opts.fold, "Fold id (A, B, ... or offset)");
  featurize->add_option("--lengths", feat_opts.lengths, "Window lengths, e.g. 1,6,24,48,168");
  featurize->add_option("--shape", feat_opts.shape,
                        "trailing|gap1|bucket|calendar|event50|none");
  featurize->add_option("--te", feat_opts.te, "Target encoding: on|off");
  featurize->add_option("--event-n", feat_opts.event_n, "Event-count window size N");
  featurize->add_option("--te-cache", feat_opts.te_cache,
                        "TE cache from `te` (computed in-process when omitted)");
  featurize->add_option("--out", feat_opts.out, "Output directory")->required();
  featurize->add_option("--schema", feat_opts.schema, "Schema JSON (default: from header)");
  featurize->add_option("--entity-keys", feat_opts.entity_keys,
                        "Entity key columns (default: device_ip,device_id,app_id,site_id)");
  featurize->callback([&] { cmd_featurize(feat_opts); });

  SynthOpts synth_opts;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic click log");
  synth->add_option("--config", synth_opts.config, "Synth config JSON")->required();
  synth->add_option("--out", synth_opts.out, "Output log CSV")->required();
  synth->add_option("--probs", synth_opts.probs, "Also write row_id,true_prob CSV");
  auto* synth_seed = synth->add_option("--seed", synth_opts.seed, "Seed override");
  synth->callback([&] {
    synth_opts.seed_set = synth_seed->count() > 0;
    cmd_synth(synth_opts);
  });

  SweepOpts sweep_opts;
  auto* sweep = app.add_subcommand("sweep", "Run the design-grid sweep");
  sweep->add_option("--input", sweep_opts.input, "Input log CSV (sorted by hour)")
      ->required();
  sweep->add_option("--grid", sweep_opts.grid, "Grid config JSON")->required();
  sweep->add_option("--out", sweep_opts.out, "Results directory")->required();
  sweep->add_option("--jobs", sweep_opts.jobs, "Parallel cells")->check(CLI::Range(1, 256));
  sweep->add_option("--schema", sweep_opts.schema, "Schema JSON (default: from header)");
  auto* sweep_seed = sweep->add_option("--seed", sweep_opts.seed, "Learner seed override");
  sweep->callback([&] {
    sweep_opts.seed_set = sweep_seed->count() > 0;
    cmd_sweep(sweep_opts);
  });

  EvalOpts eval_opts;
  auto* eval = app.add_subcommand("eval", "Score a prediction file against labels");
  eval->add_option("--pred", eval_opts.pred, "Predictions CSV (row_id,score)")->required();
  eval->add_option("--labels", eval_opts.labels, "Labels CSV (row_id,label)")->required();
  eval->add_option("--out", eval_opts.out, "Output metrics JSON")->required();
  eval->callback([&] { cmd_eval(eval_opts); });

  ReportOpts report_opts;
  auto* report = app.add_subcommand("report", "Summarize a sweep results directory");
  report->add_option("--results", report_opts.results, "Sweep results directory")
      ->required();
  report->add_option("--baseline", report_opts.baseline,
                     "Baseline window spec, e.g. trailing:1,6,24,48,168");
  report->add_option("--out", report_opts.out, "Report directory")->required();
  report->callback([&] { cmd_report(report_opts); });

  EdaOpts eda_opts;
  auto* eda = app.add_subcommand("eda", "Day-level CTR and unseen-value tables");
  eda->add_option("--input", eda_opts.input, "Input log CSV")->required();
  eda->add_option("--columns", eda_opts.columns,
                  "Categorical columns (default: all in schema)");
  eda->add_option("--out", eda_opts.out, "Output directory")->required();
  eda->add_option("--schema", eda_opts.schema, "Schema JSON (default: from header)");
  eda->callback([&] { cmd_eda(eda_opts); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
