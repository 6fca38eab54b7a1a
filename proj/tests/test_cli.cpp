#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "chronofeat/common.hpp"
#include "chronofeat/csv.hpp"
#include "oracle.hpp"
#include "testutil.hpp"

using namespace chronofeat;
namespace fs = std::filesystem;

namespace {

const char* kSynthJson = R"({
  "n_days": 4,
  "rows_per_hour": {"mean": 20.0},
  "base_ctr": 0.2,
  "entity_effect_scale": 1.0,
  "columns": [
    {"name": "user", "cardinality": 15, "zipf_exponent": 1.1, "carries_effect": true},
    {"name": "site", "cardinality": 5, "zipf_exponent": 1.1}
  ]
})";

std::string grid_json() {
  return R"({
    "lengths": [[1, 6]],
    "shapes": ["none", "trailing"],
    "te": [true, false],
    "event_n": [50],
    "folds": ["A"],
    "entity_keys": ["user", "site"],
    "learner": {"max_epochs": 6, "batch_size": 64}
  })";
}

// Strips the fields that legitimately change between runs.
nlohmann::json manifest_without_timing(const std::string& path) {
  nlohmann::json j;
  std::ifstream(path) >> j;
  j.erase("wall_seconds");
  j.erase("peak_rss_kb");
  return j;
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("help, version, and exit codes") {
    const auto help = testutil::run_cli({"--help"});
    CHECK(help.exit_code == 0);
    for (const char* sub : {"sample", "stats", "splits", "te", "featurize", "synth",
                            "sweep", "eval", "report", "eda"})
      CHECK(help.out.find(sub) != std::string::npos);

    const auto sub_help = testutil::run_cli({"sweep", "--help"});
    CHECK(sub_help.exit_code == 0);
    CHECK(sub_help.out.find("--jobs") != std::string::npos);

    const auto version = testutil::run_cli({"--version"});
    CHECK(version.exit_code == 0);
    CHECK(version.out.find("0.1.0") != std::string::npos);

    CHECK(testutil::run_cli({"conjure"}).exit_code == 2);
    CHECK(testutil::run_cli({"stats", "--nonsense"}).exit_code == 2);
    CHECK(testutil::run_cli({"stats"}).exit_code == 2);  // missing required
    CHECK(testutil::run_cli({}).exit_code == 2);         // subcommand required

    const auto runtime = testutil::run_cli(
        {"stats", "--input", "/nonexistent.csv", "--out", "/tmp/x.csv"});
    CHECK(runtime.exit_code == 1);
    CHECK(runtime.err.find("error:") != std::string::npos);
  }

  TEST_CASE("synth is seed-addressable via flag, env, and config") {
    testutil::TmpDir tmp;
    testutil::write_file(tmp.file("synth.json"), kSynthJson);
    auto gen = [&](const std::string& name, std::vector<std::string> extra,
                   std::vector<std::string> env = {}) {
      std::vector<std::string> args = {"synth", "--config", tmp.file("synth.json"),
                                       "--out", tmp.file(name)};
      for (auto& a : extra) args.push_back(a);
      const auto r = testutil::run_cli(args, env);
      REQUIRE(r.exit_code == 0);
      return testutil::read_file(tmp.file(name));
    };
    const std::string builtin = gen("a.csv", {});
    const std::string builtin2 = gen("b.csv", {});
    CHECK(builtin == builtin2);  // same config, same bytes
    const std::string env_seeded = gen("c.csv", {}, {"CHRONOFEAT_SEED=99"});
    CHECK(env_seeded != builtin);
    // An explicit flag beats the environment.
    const std::string flag_seeded =
        gen("d.csv", {"--seed", "123"}, {"CHRONOFEAT_SEED=99"});
    const std::string flag_only = gen("e.csv", {"--seed", "123"});
    CHECK(flag_seeded == flag_only);
    CHECK(flag_seeded != env_seeded);

    // --probs emits one generating probability per row.
    const auto r = testutil::run_cli({"synth", "--config", tmp.file("synth.json"),
                                      "--out", tmp.file("f.csv"), "--probs",
                                      tmp.file("probs.csv")});
    REQUIRE(r.exit_code == 0);
    const std::string probs = testutil::read_file(tmp.file("probs.csv"));
    CHECK(probs.rfind("row_id,true_prob\n", 0) == 0);
  }

  TEST_CASE("sample keeps exactly the hash-selected rows and writes a manifest") {
    testutil::TmpDir tmp;
    testutil::write_file(tmp.file("synth.json"), kSynthJson);
    REQUIRE(testutil::run_cli({"synth", "--config", tmp.file("synth.json"), "--out",
                               tmp.file("log.csv")})
                .exit_code == 0);
    REQUIRE(testutil::run_cli({"sample", "--input", tmp.file("log.csv"), "--rate", "37",
                               "--output", tmp.file("s.csv")})
                .exit_code == 0);

    std::ifstream full_in(tmp.file("log.csv")), kept_in(tmp.file("s.csv"));
    CsvReader full(full_in), kept(kept_in);
    std::vector<std::string> row;
    REQUIRE(full.read_row(row));
    const std::vector<std::string> header = row;
    std::vector<std::string> expected;
    while (full.read_row(row))
      if (oracle::fnv(row[0]) % 100 < 37) expected.push_back(row[0]);
    REQUIRE(kept.read_row(row));
    CHECK(row == header);
    std::vector<std::string> got;
    while (kept.read_row(row)) got.push_back(row[0]);
    CHECK(got == expected);  // membership and original order

    nlohmann::json manifest;
    std::ifstream(tmp.file("s.csv") + ".manifest.json") >> manifest;
    CHECK(manifest.at("command") == "sample");
    CHECK(manifest.at("tool_version") == "0.1.0");
    const std::string digest = manifest.at("inputs").at(tmp.file("log.csv"));
    CHECK(digest.rfind("fnv1a64:", 0) == 0);
    CHECK(manifest.at("config").at("rate") == 37);
  }

  TEST_CASE("stats and splits surface a partial trailing day") {
    testutil::TmpDir tmp;
    // Two full days plus a third day that stops at hour 22.
    std::ostringstream log;
    log << "id,click,hour,user\n";
    std::uint64_t id = 1;
    for (int d = 0; d < 3; ++d)
      for (int h = 0; h < (d == 2 ? 22 : 24); ++h)
        log << id++ << "," << (h % 5 == 0 ? 1 : 0) << ",14102" << (1 + d)
            << (h < 10 ? "0" : "") << h << ",u1\n";
    testutil::write_file(tmp.file("log.csv"), log.str());

    const auto stats = testutil::run_cli(
        {"stats", "--input", tmp.file("log.csv"), "--out", tmp.file("stats.csv")});
    CHECK(stats.exit_code == 0);
    CHECK(stats.err.find("partial") != std::string::npos);
    CHECK(stats.err.find("2014-10-23") != std::string::npos);
    const std::string table = testutil::read_file(tmp.file("stats.csv"));
    CHECK(table.rfind("day,n_rows,n_clicks,click_rate\n", 0) == 0);
    CHECK(table.find("2014-10-21,24,5,") != std::string::npos);

    const auto splits = testutil::run_cli({"splits", "--input", tmp.file("log.csv"),
                                           "--folds", "A", "--report",
                                           tmp.file("splits.csv")});
    CHECK(splits.exit_code == 0);
    CHECK(splits.err.find("partial") != std::string::npos);
    const std::string report = testutil::read_file(tmp.file("splits.csv"));
    // Fold A tests on the partial final day.
    CHECK(report.find("A,test,2014-10-23 00:00,2014-10-23 23:00,22,") !=
          std::string::npos);
  }

  TEST_CASE("eval scores a prediction file against labels") {
    testutil::TmpDir tmp;
    testutil::write_file(tmp.file("pred.csv"),
                         "row_id,score\n1,0.1\n2,0.4\n3,0.35\n4,0.8\n");
    testutil::write_file(tmp.file("labels.csv"), "row_id,label\n1,0\n2,0\n3,1\n4,1\n");
    const auto r = testutil::run_cli({"eval", "--pred", tmp.file("pred.csv"), "--labels",
                                      tmp.file("labels.csv"), "--out", tmp.file("m.json")});
    REQUIRE(r.exit_code == 0);
    nlohmann::json m;
    std::ifstream(tmp.file("m.json")) >> m;
    CHECK(m.at("roc_auc").get<double>() == 0.75);
    CHECK(m.at("n_rows") == 4);
    CHECK(m.at("n_pos") == 2);
    CHECK(m.at("n_neg") == 2);

    testutil::write_file(tmp.file("short.csv"), "row_id,label\n1,0\n2,0\n3,1\n");
    CHECK(testutil::run_cli({"eval", "--pred", tmp.file("pred.csv"), "--labels",
                             tmp.file("short.csv"), "--out", tmp.file("m2.json")})
              .exit_code == 1);
  }

  TEST_CASE("the full pipeline runs end to end and reruns byte-identically") {
    testutil::TmpDir tmp;
    testutil::write_file(tmp.file("synth.json"), kSynthJson);
    testutil::write_file(tmp.file("grid.json"), grid_json());
    REQUIRE(testutil::run_cli({"synth", "--config", tmp.file("synth.json"), "--out",
                               tmp.file("log.csv")})
                .exit_code == 0);

    // TE cache, then one explicit featurize cell.
    REQUIRE(testutil::run_cli({"te", "--input", tmp.file("log.csv"), "--out",
                               tmp.file("te.fmx")})
                .exit_code == 0);
    const auto feat = testutil::run_cli(
        {"featurize", "--input", tmp.file("log.csv"), "--fold", "A", "--lengths", "1,6",
         "--shape", "trailing", "--te", "on", "--te-cache", tmp.file("te.fmx"),
         "--entity-keys", "user,site", "--out", tmp.file("cellA")});
    REQUIRE(feat.exit_code == 0);
    for (const char* part : {"train.fmx", "val.fmx", "test.fmx", "manifest.json"})
      CHECK(fs::exists(tmp.file("cellA") + "/" + part));

    // Sweep twice into separate directories: identical modulo wall time.
    for (const char* dir : {"r1", "r2"})
      REQUIRE(testutil::run_cli({"sweep", "--input", tmp.file("log.csv"), "--grid",
                                 tmp.file("grid.json"), "--out", tmp.file(dir)})
                  .exit_code == 0);
    CHECK(testutil::read_file(tmp.file("r1") + "/results.csv") ==
          testutil::read_file(tmp.file("r2") + "/results.csv"));
    CHECK(testutil::read_file(tmp.file("r1") + "/labels_test_A.csv") ==
          testutil::read_file(tmp.file("r2") + "/labels_test_A.csv"));
    const std::string cell = "/cells/A__trailing_1-6__te-on__n50/";
    CHECK(testutil::read_file(tmp.file("r1") + cell + "predictions_test.csv") ==
          testutil::read_file(tmp.file("r2") + cell + "predictions_test.csv"));
    CHECK(manifest_without_timing(tmp.file("r1") + "/run_manifest.json") ==
          manifest_without_timing(tmp.file("r2") + "/run_manifest.json"));

    // Reports from both sweeps agree byte for byte.
    for (const char* pair : {"r1", "r2"}) {
      const std::string rep = tmp.file(std::string("rep_") + pair);
      REQUIRE(testutil::run_cli({"report", "--results", tmp.file(pair), "--baseline",
                                 "trailing:1,6", "--out", rep})
                  .exit_code == 0);
      CHECK(fs::exists(rep + "/league_table.csv"));
      CHECK(fs::exists(rep + "/absolute_metrics.csv"));
      CHECK(fs::exists(rep + "/te_uplift.csv"));
      CHECK(fs::exists(rep + "/index.json"));
    }
    for (const char* f : {"league_table.csv", "absolute_metrics.csv", "te_uplift.csv",
                          "traffic_light.csv", "index.json"})
      CHECK(testutil::read_file(tmp.file("rep_r1") + "/" + f) ==
            testutil::read_file(tmp.file("rep_r2") + "/" + f));

    // eda emits both day-level tables.
    REQUIRE(testutil::run_cli({"eda", "--input", tmp.file("log.csv"), "--columns",
                               "user", "--out", tmp.file("eda")})
                .exit_code == 0);
    CHECK(testutil::read_file(tmp.file("eda") + "/ctr_by_day.csv")
              .rfind("day,n_rows,n_clicks,ctr\n", 0) == 0);
    CHECK(testutil::read_file(tmp.file("eda") + "/unseen_rate.csv")
              .rfind("day,column,n_rows,n_unseen,unseen_rate\n", 0) == 0);
  }
}
