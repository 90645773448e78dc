#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "cvdbench/report/bundle.hpp"
#include "cvdbench/report/config.hpp"
#include "cvdbench/report/pipeline.hpp"
#include "support/cohort.hpp"

using namespace cvd;
using namespace cvd::report;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

void spit(const fs::path& p, const std::string& text) {
  fs::create_directories(p.parent_path());
  std::ofstream(p, std::ios::binary) << text;
}

// Scratch directory with a small cohort file, removed at scope exit.
struct Workspace {
  fs::path dir;
  fs::path data;

  explicit Workspace(const std::string& name, std::size_t rows = 400) {
    dir = fs::temp_directory_path() / ("cvdbench_" + name + "_" + std::to_string(::getpid()));
    fs::remove_all(dir);
    fs::create_directories(dir);
    data = dir / "cohort.csv";
    spit(data, testing::synthetic_cohort_csv({rows, 17, 0.02, 0.0}));
  }
  ~Workspace() { fs::remove_all(dir); }
};

std::string small_config(const fs::path& data) {
  return R"({
  "seed": 7,
  "input": { "path": ")" + data.string() + R"(" },
  "cv": { "folds": 3 },
  "learners": [
    { "kind": "logistic", "search": { "strategies": ["grid"], "space": { "lambda": { "type": "continuous", "min": 1e-4, "max": 1, "log": true, "grid": [1e-4, 1e-2] } } } },
    { "kind": "knn", "hyperparameters": { "k": 9 } },
    { "kind": "cart", "hyperparameters": { "max_depth": 4 } },
    { "kind": "random_forest", "hyperparameters": { "n_trees": 10, "max_depth": 5 } },
    { "kind": "gbt_levelwise", "hyperparameters": { "rounds": 20, "max_depth": 3 } },
    { "kind": "gbt_oblivious", "hyperparameters": { "rounds": 20, "depth": 3 }, "search": { "strategies": ["random"], "random_budget": 2, "space": { "learning_rate": { "min": 0.05, "max": 0.2 } } } }
  ]`EXTRA`,
  "explain": { "repeats": 2, "background": 64, "instances": 2, "samples": 64 },
  "output": { "density_sample": 100 }
})";
}

std::string with_extra(std::string text, const std::string& extra) {
  text.replace(text.find("`EXTRA`"), 7, extra);
  return text;
}

RunConfig fixture_config(const Workspace& ws, const std::string& out, const std::string& extra = "") {
  auto c = parse_config(with_extra(small_config(ws.data), extra), (ws.dir / "config.json").string());
  c.output_dir = (ws.dir / out).string();
  return c;
}

std::size_t csv_rows(const std::string& text) { return parse_csv_table(text).size(); }

}  // namespace

TEST_CASE("config parsing") {
  SUBCASE("seed is required") {
    CHECK_THROWS_WITH_AS(parse_config(R"({"input": {"path": "x.csv"}})", "<config>", false),
                         doctest::Contains("config.seed"), ConfigError);
  }
  SUBCASE("every problem is listed at once") {
    const std::string bad = R"({
      "seed": 1, "input": {"path": "x.csv"}, "colour": 3,
      "split": {"ratio": 1.5},
      "cv": {"folds": 1},
      "learners": [{"kind": "svm"}, {"kind": "knn", "hyperparameters": {"k": 0}}]
    })";
    try {
      parse_config(bad, "<config>", false);
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      const std::string m = e.what();
      CHECK(m.find("5 problem(s)") != std::string::npos);
      CHECK(m.find("config.colour: unknown key") != std::string::npos);
      CHECK(m.find("config.split.ratio") != std::string::npos);
      CHECK(m.find("config.cv.folds") != std::string::npos);
      CHECK(m.find("config.learners[0].kind") != std::string::npos);
      CHECK(m.find("config.learners[1].hyperparameters") != std::string::npos);
    }
  }
  SUBCASE("missing input file is reported") {
    CHECK_THROWS_WITH_AS(parse_config(R"({"seed": 1, "input": {"path": "/no/such/file.csv"}})"),
                         doctest::Contains("file not found"), ConfigError);
  }
  SUBCASE("grid larger than the cap is refused") {
    CHECK_THROWS_WITH_AS(
        parse_config(R"({"seed": 1, "input": {"path": "x.csv"},
                         "learners": [{"kind": "cart", "search": {"strategies": ["grid"], "grid_cap": 10}}]})",
                     "<config>", false),
        doctest::Contains("over grid_cap 10"), ConfigError);
  }
  SUBCASE("defaults") {
    const auto c = parse_config(R"({"seed": 1, "input": {"path": "x.csv"}})", "<config>", false);
    CHECK(c.learners.size() == 6);
    CHECK(c.split_ratio == 0.8);
    CHECK(c.ece_bins == 10);
    CHECK(c.threshold == 0.5);
  }
  SUBCASE("relative input resolves against the config directory") {
    const auto c = parse_config(R"({"seed": 1, "input": {"path": "../data/a.csv"}})", "/tmp/x/configs/run.json", false);
    CHECK(c.resolved_input == "/tmp/x/data/a.csv");
  }
}

TEST_CASE("config hash tracks semantic fields only") {
  const std::string base = R"({"seed": 3, "input": {"path": "x.csv"}, "output": {"dir": "A"}})";
  const auto h = parse_config(base, "<config>", false).hash();
  CHECK(h.size() == 64);
  // output directory and spelled-out defaults do not count
  CHECK(parse_config(R"({"seed": 3, "input": {"path": "x.csv"}, "output": {"dir": "B"}})", "<config>", false).hash() == h);
  CHECK(parse_config(R"({"seed": 3, "input": {"path": "x.csv"}, "split": {"ratio": 0.8}, "metrics": {"ece_bins": 10}})",
                     "<config>", false)
            .hash() == h);
  CHECK(parse_config(R"({"seed": 4, "input": {"path": "x.csv"}})", "<config>", false).hash() != h);
  CHECK(parse_config(R"({"seed": 3, "input": {"path": "x.csv"}, "metrics": {"ece_bins": 15}})", "<config>", false)
            .hash() != h);
  CHECK(parse_config(R"({"seed": 3, "input": {"path": "x.csv"}, "features": {"include_bmi": false}})", "<config>",
                     false)
            .hash() != h);
}

TEST_CASE("seed override and learner restriction") {
  auto c = parse_config(R"({"seed": 3, "input": {"path": "x.csv"}, "split": {"seed": 99},
                            "learners": [{"kind": "knn", "seed": 5}, {"kind": "cart"}]})",
                        "<config>", false);
  CHECK(c.effective_split_seed() == 99);
  const auto before = c.hash();
  override_seed(c, 11);
  CHECK(c.seed == 11);
  CHECK(c.effective_split_seed() == c.stream_seed("split"));
  CHECK(c.learners[0].spec.seed == c.stream_seed("learner:knn"));
  CHECK(c.hash() != before);

  restrict_learners(c, "cart");
  REQUIRE(c.learners.size() == 1);
  CHECK(c.learners[0].spec.kind == learners::LearnerKind::Cart);
  CHECK_THROWS_WITH_AS(restrict_learners(c, "knn"), doctest::Contains("knn"), ConfigError);
}

TEST_CASE("stage selection") {
  const auto v = StageSet::for_command("validate");
  CHECK_FALSE((v.stats || v.train || v.tune || v.evaluate || v.explain));
  const auto e = StageSet::for_command("evaluate");
  CHECK(e.train);
  CHECK(e.tune);
  CHECK(e.evaluate);
  CHECK_FALSE(e.explain);
  const auto r = StageSet::for_command("run");
  CHECK((r.stats && r.train && r.tune && r.evaluate && r.explain));
  CHECK_THROWS_AS(StageSet::for_command("bake"), ConfigError);
}

TEST_CASE("bundle table writers") {
  metrics::EvalReport ev = metrics::evaluate(std::vector<double>{0.9, 0.2, 0.7, 0.4}, std::vector<int>{1, 0, 0, 1});
  const std::vector<ModelRow> rows{{"A", ev}, {"B", ev}};
  const auto md = performance_markdown(rows);
  CHECK(std::count(md.begin(), md.end(), '\n') == 4);  // header, rule, two models
  CHECK(md.rfind("| Model | Accuracy (%) | Precision (%) | Recall (%) | F1-Score (%) | AUC (%) |", 0) == 0);
  CHECK(performance_csv(rows) == "model,accuracy,precision,recall,f1,auc\nA,50.0,50.0,50.0,50.0,75.0\n"
                                 "B,50.0,50.0,50.0,50.0,75.0\n");
  const auto cal = parse_csv_table(calibration_csv(rows));
  CHECK(cal[0] == std::vector<std::string>{"model", "ece", "brier"});
  CHECK(cal.size() == 3);

  const std::vector<std::size_t> index{4, 8, 15, 16};
  const std::vector<double> probs{0.1, 1.0 / 3.0, 0.987654321, 0.5};
  const std::vector<int> labels{0, 1, 1, 0};
  const auto back = parse_predictions_csv(predictions_csv(index, probs, labels, 0.5));
  CHECK(back.index == index);
  CHECK(back.probs == probs);
  CHECK(back.labels == labels);
  CHECK_THROWS_AS(parse_predictions_csv("a,b\n1,2\n"), SchemaError);
}

TEST_CASE("full pipeline on a small cohort") {
  Workspace ws("pipeline");
  const auto cfg = fixture_config(ws, "run1");
  const auto result = run(cfg, StageSet::for_command("run"));
  REQUIRE_MESSAGE(result.ok, result.error);
  const fs::path out = cfg.output_dir;

  SUBCASE("bundle layout") {
    for (const char* f : {"manifest.json", "ingest/summary.csv", "ingest/rejected_rows.csv", "preprocess/split.csv",
                          "stats/tests.csv", "stats/odds_ratios.csv", "tables/performance.md",
                          "tables/calibration.md", "tables/search_comparison.md", "tuning/summary.csv",
                          "explain/importance.csv", "explain/shapley.csv", "figures/correlation.csv",
                          "figures/density_sample.csv", "models/gbt_oblivious.model"}) {
      CHECK_MESSAGE(fs::exists(out / f), f);
    }
    CHECK(result.learners.size() == 6);
    CHECK(csv_rows(slurp(out / "tables/performance.csv")) == 7);
    const auto md = slurp(out / "tables/performance.md");
    CHECK(std::count(md.begin(), md.end(), '\n') == 8);
    CHECK(parse_csv_table(slurp(out / "tables/calibration.csv"))[0] == std::vector<std::string>{"model", "ece", "brier"});
    // at least one learner was tuned, so the defaults tables are written too
    CHECK(fs::exists(out / "tables/performance_defaults.csv"));
    CHECK(result.train_rows + result.test_rows == result.cleaned);
  }

  SUBCASE("manifest lists every file with its digest") {
    const auto manifest = nlohmann::json::parse(slurp(out / "manifest.json"));
    CHECK(manifest["status"] == "complete");
    CHECK(manifest["config_hash"] == cfg.hash());
    std::set<std::string> listed;
    for (const auto& f : manifest["files"]) {
      const auto name = f["name"].get<std::string>();
      listed.insert(name);
      const auto text = slurp(out / name);
      CHECK_MESSAGE(f["sha256"] == sha256_hex(text), name);
      CHECK(f["bytes"] == text.size());
    }
    std::size_t on_disk = 0;
    for (const auto& e : fs::recursive_directory_iterator(out)) {
      if (!e.is_regular_file() || e.path().filename() == "manifest.json") continue;
      ++on_disk;
      CHECK_MESSAGE(listed.count(fs::relative(e.path(), out).generic_string()) == 1, e.path().string());
    }
    CHECK(on_disk == listed.size());
  }

  SUBCASE("performance tables are recomputable from the predictions files") {
    std::vector<ModelRow> rows;
    for (const auto& l : result.learners) {
      const auto p = parse_predictions_csv(slurp(out / "predictions" / (std::string(learners::to_string(l.kind)) + ".csv")));
      CHECK(p.labels.size() == result.test_rows);
      rows.push_back({l.name, metrics::evaluate(p.probs, p.labels, cfg.threshold, cfg.ece_bins)});
    }
    CHECK(performance_csv(rows) == slurp(out / "tables/performance.csv"));
    CHECK(calibration_csv(rows) == slurp(out / "tables/calibration.csv"));
  }

  SUBCASE("figure data shapes") {
    for (const auto& l : result.learners) {
      const auto rel = slurp(out / "figures" / ("reliability_" + std::string(learners::to_string(l.kind)) + ".csv"));
      CHECK(csv_rows(rel) - 1 <= cfg.ece_bins);
    }
    const auto corr = parse_csv_table(slurp(out / "figures/correlation.csv"));
    const std::size_t d = corr.size() - 1;
    REQUIRE(d >= 5);
    for (std::size_t i = 1; i <= d; ++i) {
      CHECK(corr[i].size() == d + 1);
      CHECK(std::stod(corr[i][i]) == doctest::Approx(1.0).epsilon(1e-12));
    }
    CHECK(csv_rows(slurp(out / "figures/density_sample.csv")) - 1 == std::min<std::size_t>(100, result.cleaned));
  }

  SUBCASE("repeated runs give byte-identical tables") {
    auto again = fixture_config(ws, "run2");
    REQUIRE(run(again, StageSet::for_command("run")).ok);
    const fs::path out2 = again.output_dir;
    std::size_t compared = 0;
    for (const auto& e : fs::recursive_directory_iterator(out)) {
      if (!e.is_regular_file()) continue;
      const auto rel = fs::relative(e.path(), out).generic_string();
      if (rel == "manifest.json" || rel.rfind("tuning/", 0) == 0 || rel == "tables/search_comparison.md") continue;
      CHECK_MESSAGE(slurp(e.path()) == slurp(out2 / rel), rel);
      ++compared;
    }
    CHECK(compared > 30);
  }
}

TEST_CASE("a failing stage leaves a partial bundle") {
  Workspace ws("partial", 120);
  // more folds than positives in the cv data: the tuning stage must fail
  auto cfg = parse_config(R"({"seed": 2, "input": {"path": ")" + ws.data.string() +
                              R"("}, "cv": {"folds": 90},
                           "learners": [{"kind": "cart", "search": {"strategies": ["grid"]}}]})",
                          (ws.dir / "c.json").string());
  cfg.output_dir = (ws.dir / "out").string();
  const auto result = run(cfg, StageSet::for_command("run"));
  CHECK_FALSE(result.ok);
  CHECK(result.failed_stage == "tune");
  const auto manifest = nlohmann::json::parse(slurp(ws.dir / "out/manifest.json"));
  CHECK(manifest["status"] == "partial");
  CHECK(manifest["failed_stage"] == "tune");
  CHECK(fs::exists(ws.dir / "out/ingest/summary.csv"));
  CHECK(fs::exists(ws.dir / "out/stats/tests.csv"));
  CHECK_FALSE(fs::exists(ws.dir / "out/tables/performance.csv"));
}

#ifdef CVDBENCH_EXE
TEST_CASE("command line exit codes") {
  Workspace ws("cli");
  const auto config_path = ws.dir / "config.json";
  spit(config_path, with_extra(small_config(ws.data), ""));
  const std::string exe = CVDBENCH_EXE;
  const auto quiet = " > " + (ws.dir / "log.txt").string() + " 2>&1";
  auto status = [&](const std::string& args) {
    const int raw = std::system((exe + " " + args + quiet).c_str());
    return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  };
  CHECK(status("validate --config " + config_path.string()) == 0);
  CHECK(slurp(ws.dir / "log.txt").find("config ok: 6 learners") != std::string::npos);
  CHECK(status("stats --config " + config_path.string() + " --out " + (ws.dir / "o").string()) == 0);
  CHECK(fs::exists(ws.dir / "o/stats/tests.csv"));

  spit(ws.dir / "bad.json", R"({"input": {"path": "cohort.csv"}})");
  CHECK(status("validate --config " + (ws.dir / "bad.json").string()) == 2);
  CHECK(status("run --config " + (ws.dir / "missing.json").string()) != 0);

  spit(ws.dir / "fails.json", R"({"seed": 2, "input": {"path": "cohort.csv"}, "cv": {"folds": 300},
                                  "learners": [{"kind": "cart", "search": {"strategies": ["grid"]}}]})");
  CHECK(status("tune --config " + (ws.dir / "fails.json").string() + " --out " + (ws.dir / "f").string()) == 1);
  CHECK(fs::exists(ws.dir / "f/manifest.json"));
}
#endif
