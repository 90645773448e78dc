#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cvdbench/learners.hpp"
#include "cvdbench/metrics.hpp"
#include "cvdbench/preprocess.hpp"
#include "cvdbench/search.hpp"
#include "cvdbench/search_space.hpp"

namespace cvd::report {

enum class Strategy { Grid, Random, Bayes, Pso };

std::string_view to_string(Strategy s);
Strategy parse_strategy(std::string_view name);

struct SearchConfig {
  std::vector<Strategy> strategies;
  tuning::SearchSpace space;
  std::size_t grid_cap = 10000;
  std::size_t random_budget = 10;
  std::size_t bayes_budget = 12;
  std::size_t pso_swarm = 6;
  std::size_t pso_iterations = 3;
};

struct LearnerConfig {
  learners::LearnerSpec spec;  // spec.seed is filled from `seed` or derived from the run seed
  std::optional<std::uint64_t> seed;
  std::optional<SearchConfig> search;
};

struct RunConfig {
  std::string config_path;     // file the config was read from (not hashed)
  std::string input_path;     // as written in the config
  std::string resolved_input;  // relative paths resolved against the config file's directory
  std::optional<char> delimiter;
  std::uint64_t seed = 0;

  preprocess::CleaningRules cleaning;
  bool include_bmi = true;
  bool write_cleaned = false;

  double split_ratio = 0.8;
  std::optional<std::uint64_t> split_seed;  // derived from `seed` when absent

  std::size_t cv_folds = 5;
  std::size_t cv_max_rows = 0;  // stratified subsample of training rows for CV; 0 = all
  metrics::Metric cv_metric = metrics::Metric::Accuracy;

  double threshold = 0.5;
  std::size_t ece_bins = 10;

  std::vector<LearnerConfig> learners;
  bool run_defaults = true;  // also evaluate default hyperparameters when tuning

  bool explain = true;
  std::string explain_model = "auto";  // learner id, or auto = best-calibrated boosting model
  std::size_t importance_repeats = 10;
  metrics::Metric importance_metric = metrics::Metric::Accuracy;
  std::size_t background_size = 256;
  std::size_t shapley_instances = 5;
  std::size_t shapley_samples = 2048;

  std::size_t density_sample = 5000;
  std::string output_dir = "out";

  std::uint64_t effective_split_seed() const;
  /// Seed for stage-level randomness (folds, searches, sampling), derived
  /// from the run seed and a stream name.
  std::uint64_t stream_seed(std::string_view stream) const;

  /// Canonical JSON of every field that affects results (output_dir and
  /// config_path excluded). Defaults are filled in, so spelling a default out
  /// explicitly does not change it.
  std::string canonical_json() const;
  /// SHA-256 hex of canonical_json().
  std::string hash() const;
};

/// Parses JSON text. Collects every problem and throws one ConfigError
/// listing them all. `check_paths` verifies that the input file exists.
RunConfig parse_config(const std::string& text, const std::string& origin = "<config>", bool check_paths = true);
RunConfig load_config(const std::string& path, bool check_paths = true);

/// Shipped per-learner search spaces (with explicit grids for grid search).
tuning::SearchSpace default_search_space(learners::LearnerKind kind);

/// Replaces the run seed and drops explicit sub-seeds so every seed derives
/// from the new value.
void override_seed(RunConfig& config, std::uint64_t seed);

/// Keeps only the named learners (comma separated ids). Throws ConfigError
/// naming unknown or unconfigured ids.
void restrict_learners(RunConfig& config, const std::string& ids);

std::string sha256_hex(const std::string& data);

}  // namespace cvd::report
