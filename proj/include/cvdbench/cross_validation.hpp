#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "cvdbench/learners.hpp"
#include "cvdbench/metrics.hpp"
#include "cvdbench/preprocess.hpp"
#include "cvdbench/search_space.hpp"

namespace cvd::tuning {

/// k stratified folds. Each class is shuffled with the seed, positives are
/// listed before negatives, and the i-th listed row goes to fold i mod k.
/// Returns one SplitPair per fold (test = that fold, train = the rest), with
/// ascending indices. Throws DomainError when a class has fewer than k rows.
std::vector<preprocess::SplitPair> stratified_kfold(std::span<const int> labels, std::size_t k,
                                                    std::uint64_t seed);

struct CvScore {
  double mean = 0.0;
  double sd = 0.0;  // sample standard deviation over folds
  std::vector<double> fold_scores;
};

struct ScoringOptions {
  metrics::Metric metric = metrics::Metric::Accuracy;
  double threshold = 0.5;
  std::size_t ece_bins = 10;
};

/// Fits on each training fold and scores its held-out fold. A failure is
/// rethrown as an Error naming the fold.
CvScore cv_score(const learners::LearnerSpec& spec, const preprocess::FeatureFrame& frame,
                 const std::vector<preprocess::SplitPair>& folds, const ScoringOptions& scoring = {});

/// `base` with the config's values written over its hyperparameters.
learners::LearnerSpec apply_config(learners::LearnerSpec base, const Config& config);

}  // namespace cvd::tuning
