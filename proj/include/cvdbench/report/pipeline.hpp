#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cvdbench/explain.hpp"
#include "cvdbench/learners.hpp"
#include "cvdbench/metrics.hpp"
#include "cvdbench/report/config.hpp"
#include "cvdbench/search.hpp"
#include "cvdbench/stats.hpp"

namespace cvd::report {

/// Stages to execute. Data loading, cleaning and the split always run;
/// later stages pull in what they need (evaluate trains or tunes first).
struct StageSet {
  bool stats = false;
  bool train = false;
  bool tune = false;
  bool evaluate = false;
  bool explain = false;

  /// validate, ingest, stats, train, tune, evaluate, explain, run.
  static StageSet for_command(std::string_view command);
};

struct LearnerOutcome {
  learners::LearnerKind kind = learners::LearnerKind::Logistic;
  std::string name;
  std::optional<learners::ModelHandle> default_model;
  std::optional<learners::ModelHandle> final_model;  // tuned when a search ran, else the default model
  bool tuned = false;
  std::vector<tuning::TrialLog> logs;
  std::string best_strategy;
  tuning::Config best_config;
  double best_cv_score = 0.0;
  std::optional<metrics::EvalReport> eval;
  std::optional<metrics::EvalReport> eval_defaults;
  std::vector<double> test_probs;
};

struct RunResult {
  bool ok = true;
  std::string failed_stage;
  std::string error;

  std::size_t raw_records = 0;
  std::size_t rejected = 0;
  std::size_t schema_violations = 0;
  std::size_t cleaned = 0;
  std::vector<std::pair<std::string, std::size_t>> dropped_by_rule;
  std::vector<std::pair<std::string, std::size_t>> outlier_counts;  // raw data, IQR rule
  std::size_t train_rows = 0;
  std::size_t test_rows = 0;
  double train_positive_rate = 0.0;
  double test_positive_rate = 0.0;

  std::optional<stats::StatsReport> stats;
  std::vector<LearnerOutcome> learners;
  std::string explained_model;
  std::optional<explain::ImportanceReport> importance;
  std::vector<explain::ShapleyAttribution> shapley;

  std::vector<std::pair<std::string, double>> timings;
  std::string config_hash;
  std::string output_dir;
};

/// Executes the requested stages and writes the bundle plus manifest.json.
/// Stage failures do not throw: the result and manifest are marked partial
/// and name the failing stage.
RunResult run(const RunConfig& config, const StageSet& stages);

}  // namespace cvd::report
