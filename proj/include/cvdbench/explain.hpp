#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "cvdbench/common.hpp"
#include "cvdbench/cross_validation.hpp"
#include "cvdbench/learners.hpp"
#include "cvdbench/preprocess.hpp"

namespace cvd::explain {

/// Columns treated as one feature. One-hot groups form a single feature named
/// after their source column; every other column stands alone.
struct FeatureGroup {
  std::string name;
  std::vector<std::size_t> columns;
};

std::vector<FeatureGroup> feature_groups(const std::vector<std::string>& column_names,
                                         const std::vector<preprocess::OneHotGroup>& categorical_map);
std::vector<FeatureGroup> singleton_groups(const std::vector<std::string>& column_names);

using PredictFn = std::function<std::vector<double>(const Matrix&)>;

struct ImportanceEntry {
  std::string feature;
  double mean_drop = 0.0;  // baseline score minus permuted score, averaged
  double sd = 0.0;         // sample sd over repeats (0 with one repeat)
  std::size_t skipped = 0; // repeats where the metric was undefined
};

struct ImportanceReport {
  std::vector<ImportanceEntry> entries;  // in group order
  double baseline = 0.0;
  std::string metric;
  std::size_t repeats = 0;
  std::uint64_t seed = 0;

  /// Feature names ordered by decreasing mean drop (stable).
  std::vector<std::string> ranking() const;
};

/// Each group's columns are permuted jointly with one row shuffle. The
/// shuffle seed depends on (seed, group name, repeat), not on column
/// positions.
ImportanceReport permutation_importance(const PredictFn& predict, const Matrix& x, std::span<const int> labels,
                                        const std::vector<FeatureGroup>& groups,
                                        const tuning::ScoringOptions& scoring, std::size_t repeats,
                                        std::uint64_t seed);

ImportanceReport permutation_importance(const learners::ModelHandle& model, const preprocess::FeatureFrame& frame,
                                        const tuning::ScoringOptions& scoring, std::size_t repeats = 10,
                                        std::uint64_t seed = 0);

struct ShapleyAttribution {
  std::size_t instance = 0;
  std::vector<std::string> features;
  std::vector<double> phi;
  std::vector<double> std_error;  // Monte-Carlo standard error of each phi
  double base = 0.0;    // mean model output over the background
  double output = 0.0;  // model output at the instance
  std::size_t samples = 0;

  /// sum(phi) + base - output.
  double efficiency_gap() const;
};

/// Permutation-sampling Shapley values. Sample s pairs a random feature
/// ordering with background row s mod B (background visited in a shuffled
/// order); starting from the background row, features are switched to the
/// instance's values one at a time and each switch's output change is
/// credited to that feature. Throws DomainError with fewer than 32
/// background rows.
ShapleyAttribution shapley_mc(const PredictFn& predict, std::span<const double> instance, const Matrix& background,
                              const std::vector<FeatureGroup>& groups, std::size_t n_samples, std::uint64_t seed,
                              std::size_t instance_index = 0);

/// `size` rows drawn per class in proportion to the class rates (at least one
/// per class when possible), ascending.
std::vector<std::size_t> stratified_sample(std::span<const int> labels, std::size_t size, std::uint64_t seed);

/// 64-bit FNV-1a; stable across platforms and runs.
std::uint64_t stable_hash(std::string_view text);

}  // namespace cvd::explain
