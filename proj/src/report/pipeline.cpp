#include "cvdbench/report/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <random>
#include <sstream>

#include "cvdbench/cross_validation.hpp"
#include "cvdbench/ingest.hpp"
#include "cvdbench/preprocess.hpp"
#include "cvdbench/report/bundle.hpp"
#include "cvdbench/tree.hpp"

namespace cvd::report {
namespace {

using learners::LearnerKind;

bool is_boosting(LearnerKind k) { return k == LearnerKind::GbtLevelwise || k == LearnerKind::GbtOblivious; }

std::string id_of(LearnerKind k) { return std::string(learners::to_string(k)); }

std::string key_value_csv(const std::vector<std::pair<std::string, std::string>>& rows) {
  std::string out = "key,value\n";
  for (const auto& [k, v] : rows) out += k + "," + v + "\n";
  return out;
}

std::string number_or_empty(double v) {
  return std::isfinite(v) ? format_exact(v) : std::string("nan");
}

// State shared between stages of one run.
struct Context {
  const RunConfig& config;
  BundleWriter& writer;
  RunResult& result;

  ingest::RawDataset cleaned;
  preprocess::ClinicalTable table;  // cleaned, before imputation
  preprocess::SplitPair split;
  preprocess::FeatureFrame frame;  // all cleaned rows, encoded with train-fitted statistics
  preprocess::FeatureFrame train;
  preprocess::FeatureFrame test;
  preprocess::ClinicalTable imputed;
};

void stage_ingest(Context& ctx) {
  const auto& cfg = ctx.config;
  auto& res = ctx.result;
  const auto raw = ingest::read_csv_file(cfg.resolved_input, cfg.delimiter);
  res.raw_records = raw.records.size();
  res.rejected = raw.rejected.size();
  res.schema_violations = ingest::validate_schema(raw).size();

  {
    std::ostringstream rejected;
    ingest::write_rejected_csv(raw, rejected);
    ctx.writer.write("ingest/rejected_rows.csv", rejected.str());
  }

  // outlier census on the parsed data, before any cleaning
  const auto raw_table = preprocess::to_clinical_table(raw, cfg.include_bmi);
  const auto census = preprocess::census_outliers(raw_table);
  std::string census_csv = "column,count\n";
  std::string census_rows = "column,row\n";
  for (std::size_t c = 0; c < census.columns.size(); ++c) {
    res.outlier_counts.emplace_back(census.columns[c], census.count(c));
    census_csv += census.columns[c] + "," + std::to_string(census.count(c)) + "\n";
    for (auto r : census.flagged[c]) census_rows += census.columns[c] + "," + std::to_string(r) + "\n";
  }
  ctx.writer.write("ingest/outliers.csv", census_csv);
  ctx.writer.write("ingest/outlier_rows.csv", census_rows);

  auto cleaning = preprocess::apply_cleaning(raw, cfg.cleaning);
  res.dropped_by_rule = cleaning.dropped_by_rule;
  ctx.cleaned = std::move(cleaning.retained);
  res.cleaned = ctx.cleaned.records.size();

  std::vector<std::pair<std::string, std::string>> summary{
      {"data_lines", std::to_string(raw.data_lines())},
      {"parsed_records", std::to_string(res.raw_records)},
      {"rejected_rows", std::to_string(res.rejected)},
      {"schema_violations", std::to_string(res.schema_violations)},
  };
  for (const auto& [rule, n] : res.dropped_by_rule) summary.emplace_back("dropped_" + rule, std::to_string(n));
  summary.emplace_back("retained_records", std::to_string(res.cleaned));
  ctx.writer.write("ingest/summary.csv", key_value_csv(summary));
  if (cfg.write_cleaned) {
    std::ostringstream out;
    ingest::write_csv(ctx.cleaned, out);
    ctx.writer.write("ingest/cleaned.csv", out.str());
  }

  ctx.table = preprocess::to_clinical_table(ctx.cleaned, cfg.include_bmi);
  ctx.split = preprocess::stratified_split(ctx.table.target, cfg.split_ratio, cfg.effective_split_seed());
  ctx.imputed = preprocess::impute(ctx.table, ctx.split.train);
  const auto encoder = preprocess::FeatureEncoder::fit(ctx.imputed, ctx.split.train);
  ctx.frame = encoder.transform(ctx.imputed);
  ctx.train = ctx.frame.subset(ctx.split.train);
  ctx.test = ctx.frame.subset(ctx.split.test);
  res.train_rows = ctx.split.train.size();
  res.test_rows = ctx.split.test.size();
  res.train_positive_rate = preprocess::positive_rate(ctx.table.target, ctx.split.train);
  res.test_positive_rate = preprocess::positive_rate(ctx.table.target, ctx.split.test);

  std::string split_csv = "set,rows,positive_rate\n";
  split_csv += "train," + std::to_string(res.train_rows) + "," + format_fixed(res.train_positive_rate, 6) + "\n";
  split_csv += "test," + std::to_string(res.test_rows) + "," + format_fixed(res.test_positive_rate, 6) + "\n";
  ctx.writer.write("preprocess/split.csv", split_csv);
  std::string scaler = "column,mean,sd\n";
  for (const auto& s : encoder.scaler()) scaler += s.column + "," + format_exact(s.mean) + "," + format_exact(s.sd) + "\n";
  ctx.writer.write("preprocess/scaler.csv", scaler);
  std::string columns = "index,column\n";
  for (std::size_t i = 0; i < ctx.frame.column_names.size(); ++i) {
    columns += std::to_string(i) + "," + ctx.frame.column_names[i] + "\n";
  }
  ctx.writer.write("preprocess/columns.csv", columns);
}

void stage_stats(Context& ctx) {
  const auto& table = ctx.table;
  auto report = stats::run_battery(table);

  std::string tests = "test,variable,statistic,df,df2,p\n";
  for (const auto& row : report.tests) {
    tests += row.test + "," + row.variable + "," + format_exact(row.result.statistic) + "," +
             format_exact(row.result.df) + "," + (row.test == "anova" ? format_exact(row.result.df2) : std::string()) +
             "," + format_exact(row.result.p_value) + "\n";
  }
  ctx.writer.write("stats/tests.csv", tests);

  std::string odds = "fit,feature,beta,odds_ratio,intercept,separated,converged,diagnostic\n";
  auto add_odds = [&](const std::string& fit, const stats::OddsRatioEstimate& e) {
    odds += fit + "," + e.feature + "," + number_or_empty(e.beta) + "," + number_or_empty(e.odds_ratio) + "," +
            number_or_empty(e.intercept) + "," + (e.separated ? "1" : "0") + "," + (e.converged ? "1" : "0") + "," +
            e.diagnostic + "\n";
  };
  for (const auto& e : report.univariate) add_odds("univariate", e);
  for (const auto& e : report.blood_pressure) add_odds("joint_ap_hi_ap_lo", e);
  ctx.writer.write("stats/odds_ratios.csv", odds);

  std::string groups = "variable,group,n,mean,median\n";
  for (const auto& g : report.groups) {
    groups += g.variable + "," + g.group + "," + std::to_string(g.n) + "," + format_exact(g.mean) + "," +
              format_exact(g.median) + "\n";
  }
  ctx.writer.write("stats/group_summary.csv", groups);

  // figure data: correlation matrix and a density sample of the cleaned data
  const auto& corr = report.correlation;
  std::string corr_csv = "feature";
  for (const auto& l : corr.labels) corr_csv += "," + l;
  corr_csv += "\n";
  for (std::size_t a = 0; a < corr.labels.size(); ++a) {
    corr_csv += corr.labels[a];
    for (std::size_t b = 0; b < corr.labels.size(); ++b) corr_csv += "," + number_or_empty(corr.values(a, b));
    corr_csv += "\n";
  }
  ctx.writer.write("figures/correlation.csv", corr_csv);

  std::vector<std::size_t> rows = iota_indices(table.rows());
  std::mt19937_64 rng(ctx.config.stream_seed("density_sample"));
  std::shuffle(rows.begin(), rows.end(), rng);
  rows.resize(std::min(rows.size(), ctx.config.density_sample));
  std::sort(rows.begin(), rows.end());
  std::vector<std::string> cols;
  for (const char* name : {"age_years", "height", "weight", "ap_hi", "ap_lo", "bmi", "cholesterol", "gluc"}) {
    if (std::find(table.names.begin(), table.names.end(), name) != table.names.end()) cols.emplace_back(name);
  }
  std::string density = "row";
  for (const auto& c : cols) density += "," + c;
  density += ",cardio\n";
  for (auto r : rows) {
    density += std::to_string(r);
    for (const auto& c : cols) density += "," + number_or_empty(table.column(c)[r]);
    density += "," + std::to_string(table.target[r]) + "\n";
  }
  ctx.writer.write("figures/density_sample.csv", density);
  ctx.result.stats = std::move(report);
}

tuning::TrialLog run_strategy(Strategy strategy, const SearchConfig& search, const tuning::Objective& objective,
                              std::uint64_t seed) {
  switch (strategy) {
    case Strategy::Grid: return tuning::grid_search(search.space, objective, search.grid_cap);
    case Strategy::Random: return tuning::random_search(search.space, search.random_budget, objective, seed);
    case Strategy::Bayes: return tuning::bayes_opt(search.space, search.bayes_budget, objective, seed);
    case Strategy::Pso: {
      tuning::PsoOptions options;
      options.swarm_size = search.pso_swarm;
      options.iterations = search.pso_iterations;
      return tuning::pso_search(search.space, options, objective, seed);
    }
  }
  throw ConfigError("unknown strategy");
}

void save_model_file(Context& ctx, const std::string& name, const learners::ModelHandle& model) {
  std::ostringstream out;
  learners::save_model(model, out);
  ctx.writer.write(name, out.str());
}

void stage_models(Context& ctx, bool tune) {
  const auto& cfg = ctx.config;
  auto& res = ctx.result;
  const bool any_search =
      tune && std::any_of(cfg.learners.begin(), cfg.learners.end(), [](const auto& l) { return l.search.has_value(); });

  preprocess::FeatureFrame cv_frame;
  std::vector<preprocess::SplitPair> folds;
  if (any_search) {
    if (cfg.cv_max_rows > 0 && cfg.cv_max_rows < ctx.train.rows()) {
      cv_frame = ctx.train.subset(
          explain::stratified_sample(ctx.train.target, cfg.cv_max_rows, cfg.stream_seed("cv_rows")));
    } else {
      cv_frame = ctx.train;
    }
    // one set of folds shared by every learner and strategy
    folds = tuning::stratified_kfold(cv_frame.target, cfg.cv_folds, cfg.stream_seed("folds"));
  }
  const tuning::ScoringOptions scoring{cfg.cv_metric, cfg.threshold, cfg.ece_bins};

  std::string summary = "learner,strategy,trials,failed,best_score,best_sd,best_config,seconds\n";
  std::string comparison =
      "| Learner | Strategy | Trials | Best CV score | SD | Seconds |\n|---|---|---:|---:|---:|---:|\n";
  for (const auto& lc : cfg.learners) {
    LearnerOutcome out;
    out.kind = lc.spec.kind;
    out.name = std::string(learners::display_name(lc.spec.kind));
    const auto id = id_of(lc.spec.kind);
    const bool search = tune && lc.search.has_value();

    if (!search || cfg.run_defaults) out.default_model = learners::fit(lc.spec, ctx.train);

    if (search) {
      const tuning::Objective objective = [&](const tuning::Config& c) {
        const auto score = tuning::cv_score(tuning::apply_config(lc.spec, c), cv_frame, folds, scoring);
        return tuning::ObjectiveValue{score.mean, score.sd};
      };
      std::optional<double> best_score;
      for (auto strategy : lc.search->strategies) {
        const auto sname = std::string(to_string(strategy));
        auto log = run_strategy(strategy, *lc.search, objective, cfg.stream_seed("search:" + id + ":" + sname));
        std::ostringstream csv;
        log.write_csv(csv);
        ctx.writer.write("tuning/" + id + "_" + sname + ".csv", csv.str());
        std::size_t failed = 0;
        for (const auto& t : log.trials) failed += t.failed ? 1 : 0;
        const auto best = log.best_index();
        summary += id + "," + sname + "," + std::to_string(log.trials.size()) + "," + std::to_string(failed) + ",";
        if (best) {
          const auto& t = log.trials[*best];
          summary += format_exact(t.mean) + "," + format_exact(t.sd) + "," + tuning::format_config(t.config);
          if (!best_score || t.mean > *best_score) {
            best_score = t.mean;
            out.best_strategy = sname;
            out.best_config = t.config;
          }
        } else {
          summary += ",,";
        }
        summary += "," + format_fixed(log.total_seconds(), 3) + "\n";
        comparison += "| " + out.name + " | " + sname + " | " + std::to_string(log.trials.size()) + " | " +
                      (best ? format_fixed(log.trials[*best].mean, 4) + " | " + format_fixed(log.trials[*best].sd, 4)
                            : std::string("n/a | n/a")) +
                      " | " + format_fixed(log.total_seconds(), 1) + " |\n";
        out.logs.push_back(std::move(log));
      }
      if (!best_score) throw Error(id + ": every tuning trial failed");
      out.best_cv_score = *best_score;
      out.tuned = true;
      out.final_model = learners::fit(tuning::apply_config(lc.spec, out.best_config), ctx.train);
    } else {
      out.final_model = out.default_model;
    }
    save_model_file(ctx, "models/" + id + ".model", *out.final_model);
    if (out.tuned && out.default_model) save_model_file(ctx, "models/" + id + "_defaults.model", *out.default_model);
    res.learners.push_back(std::move(out));
  }
  if (any_search) {
    ctx.writer.write("tuning/summary.csv", summary);
    ctx.writer.write("tables/search_comparison.md", comparison);
  }
}

void stage_evaluate(Context& ctx) {
  const auto& cfg = ctx.config;
  std::vector<ModelRow> rows;
  std::vector<ModelRow> default_rows;
  bool any_tuned = false;
  for (auto& out : ctx.result.learners) {
    const auto id = id_of(out.kind);
    out.test_probs = learners::predict_proba(*out.final_model, ctx.test);
    ctx.writer.write("predictions/" + id + ".csv",
                     predictions_csv(ctx.split.test, out.test_probs, ctx.test.target, cfg.threshold));
    out.eval = metrics::evaluate(out.test_probs, ctx.test.target, cfg.threshold, cfg.ece_bins);
    ctx.writer.write("figures/reliability_" + id + ".csv", reliability_csv(out.eval->reliability));
    ctx.writer.write("figures/roc_" + id + ".csv", roc_csv(metrics::roc_curve(out.test_probs, ctx.test.target)));
    rows.push_back({out.name, *out.eval});
    if (out.tuned) any_tuned = true;
  }
  if (any_tuned && cfg.run_defaults) {
    for (auto& out : ctx.result.learners) {
      if (!out.default_model) continue;
      const auto id = id_of(out.kind);
      const auto probs = learners::predict_proba(*out.default_model, ctx.test);
      ctx.writer.write("predictions/" + id + "_defaults.csv",
                       predictions_csv(ctx.split.test, probs, ctx.test.target, cfg.threshold));
      out.eval_defaults = metrics::evaluate(probs, ctx.test.target, cfg.threshold, cfg.ece_bins);
      default_rows.push_back({out.name, *out.eval_defaults});
    }
    ctx.writer.write("tables/performance_defaults.csv", performance_csv(default_rows));
    ctx.writer.write("tables/performance_defaults.md", performance_markdown(default_rows));
    ctx.writer.write("tables/calibration_defaults.csv", calibration_csv(default_rows));
    ctx.writer.write("tables/calibration_defaults.md", calibration_markdown(default_rows));
  }
  ctx.writer.write("tables/performance.csv", performance_csv(rows));
  ctx.writer.write("tables/performance.md", performance_markdown(rows));
  ctx.writer.write("tables/calibration.csv", calibration_csv(rows));
  ctx.writer.write("tables/calibration.md", calibration_markdown(rows));
  ctx.writer.write("figures/confusion.csv", confusion_csv(rows));
  ctx.writer.write("figures/accuracy_bars.csv", accuracy_bars_csv(rows));
}

const LearnerOutcome& pick_explained(const Context& ctx) {
  const auto& learners = ctx.result.learners;
  if (learners.empty()) throw Error("no trained models to explain");
  if (ctx.config.explain_model != "auto") {
    const auto kind = learners::parse_learner_kind(ctx.config.explain_model);
    for (const auto& l : learners) {
      if (l.kind == kind) return l;
    }
    throw ConfigError("explain model '" + ctx.config.explain_model + "' was not trained");
  }
  const bool have_boosting = std::any_of(learners.begin(), learners.end(), [](const auto& l) { return is_boosting(l.kind); });
  const LearnerOutcome* best = nullptr;
  for (const auto& l : learners) {
    if (have_boosting && !is_boosting(l.kind)) continue;
    if (!best || l.eval->ece < best->eval->ece ||
        (l.eval->ece == best->eval->ece && l.eval->brier < best->eval->brier)) {
      best = &l;
    }
  }
  return *best;
}

void stage_explain(Context& ctx) {
  const auto& cfg = ctx.config;
  auto& res = ctx.result;
  const auto& chosen = pick_explained(ctx);
  const auto& model = *chosen.final_model;
  res.explained_model = id_of(chosen.kind);

  const tuning::ScoringOptions scoring{cfg.importance_metric, cfg.threshold, cfg.ece_bins};
  auto importance = explain::permutation_importance(model, ctx.test, scoring, cfg.importance_repeats,
                                                    cfg.stream_seed("importance"));
  const auto ranking = importance.ranking();
  std::string csv = "model,feature,rank,mean_drop,sd,skipped,baseline,metric,repeats\n";
  for (const auto& e : importance.entries) {
    const auto rank = std::find(ranking.begin(), ranking.end(), e.feature) - ranking.begin() + 1;
    csv += res.explained_model + "," + e.feature + "," + std::to_string(rank) + "," + number_or_empty(e.mean_drop) +
           "," + format_exact(e.sd) + "," + std::to_string(e.skipped) + "," + format_exact(importance.baseline) + "," +
           importance.metric + "," + std::to_string(importance.repeats) + "\n";
  }
  ctx.writer.write("explain/importance.csv", csv);
  res.importance = std::move(importance);

  if (cfg.shapley_instances > 0) {
    const auto groups = explain::feature_groups(ctx.test.column_names, ctx.test.categorical_map);
    const auto bg_rows =
        explain::stratified_sample(ctx.train.target, cfg.background_size, cfg.stream_seed("background"));
    const Matrix background = ctx.train.matrix.select_rows(bg_rows);
    const auto picks = explain::stratified_sample(ctx.test.target, cfg.shapley_instances, cfg.stream_seed("instances"));
    const explain::PredictFn predict = [&model](const Matrix& rows) { return learners::predict_proba(model, rows); };
    std::string detail = "model,instance,row,feature,raw_value,phi,std_error\n";
    std::string summary = "model,instance,row,label,base,output,efficiency_gap,samples\n";
    for (auto i : picks) {
      const std::size_t row = ctx.split.test[i];
      auto attribution = explain::shapley_mc(predict, ctx.test.matrix.row(i), background, groups, cfg.shapley_samples,
                                             learners::mix_seed(cfg.stream_seed("shapley"), row), i);
      for (std::size_t f = 0; f < attribution.features.size(); ++f) {
        const auto& name = attribution.features[f];
        const double raw = ctx.imputed.column(name)[row];
        detail += res.explained_model + "," + std::to_string(i) + "," + std::to_string(row) + "," + name + "," +
                  number_or_empty(raw) + "," + format_exact(attribution.phi[f]) + "," +
                  format_exact(attribution.std_error[f]) + "\n";
      }
      summary += res.explained_model + "," + std::to_string(i) + "," + std::to_string(row) + "," +
                 std::to_string(ctx.test.target[i]) + "," + format_exact(attribution.base) + "," +
                 format_exact(attribution.output) + "," + format_exact(attribution.efficiency_gap()) + "," +
                 std::to_string(attribution.samples) + "\n";
      res.shapley.push_back(std::move(attribution));
    }
    ctx.writer.write("explain/shapley.csv", detail);
    ctx.writer.write("explain/shapley_summary.csv", summary);
  }
}

}  // namespace

StageSet StageSet::for_command(std::string_view command) {
  StageSet s;
  if (command == "validate" || command == "ingest") return s;
  if (command == "stats") {
    s.stats = true;
  } else if (command == "train") {
    s.train = true;
  } else if (command == "tune") {
    s.train = s.tune = true;
  } else if (command == "evaluate") {
    s.train = s.tune = s.evaluate = true;
  } else if (command == "explain") {
    s.train = s.tune = s.evaluate = s.explain = true;
  } else if (command == "run") {
    s.stats = s.train = s.tune = s.evaluate = s.explain = true;
  } else {
    throw ConfigError("unknown command '" + std::string(command) + "'");
  }
  return s;
}

RunResult run(const RunConfig& config, const StageSet& stages) {
  RunResult result;
  result.config_hash = config.hash();
  result.output_dir = config.output_dir;
  BundleWriter writer(config.output_dir);
  Context ctx{config, writer, result, {}, {}, {}, {}, {}, {}, {}};

  auto timed = [&](const std::string& name, const std::function<void()>& body) {
    if (!result.ok) return;
    const auto start = std::chrono::steady_clock::now();
    try {
      body();
    } catch (const std::exception& e) {
      result.ok = false;
      result.failed_stage = name;
      result.error = e.what();
    }
    result.timings.emplace_back(name, std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
  };

  timed("ingest", [&] { stage_ingest(ctx); });
  if (stages.stats) timed("stats", [&] { stage_stats(ctx); });
  if (stages.train || stages.tune) timed(stages.tune ? "tune" : "train", [&] { stage_models(ctx, stages.tune); });
  if (stages.evaluate) timed("evaluate", [&] { stage_evaluate(ctx); });
  if (stages.explain && config.explain) timed("explain", [&] { stage_explain(ctx); });

  BundleWriter::Manifest manifest;
  manifest.config_hash = result.config_hash;
  manifest.config_path = config.config_path;
  manifest.seed = config.seed;
  manifest.complete = result.ok;
  manifest.failed_stage = result.failed_stage;
  manifest.error = result.error;
  manifest.timings = result.timings;
  writer.write_manifest(manifest);
  return result;
}

}  // namespace cvd::report
