#include "cvdbench/cross_validation.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace cvd::tuning {

std::vector<preprocess::SplitPair> stratified_kfold(std::span<const int> labels, std::size_t k,
                                                    std::uint64_t seed) {
  if (k < 2) throw DomainError("stratified_kfold: k must be at least 2");
  std::vector<std::size_t> pos;
  std::vector<std::size_t> neg;
  for (std::size_t i = 0; i < labels.size(); ++i) (labels[i] == 1 ? pos : neg).push_back(i);
  if (pos.size() < k || neg.size() < k) {
    throw DomainError("stratified_kfold: each class needs at least " + std::to_string(k) + " rows (have " +
                      std::to_string(pos.size()) + " positive, " + std::to_string(neg.size()) + " negative)");
  }
  std::mt19937_64 rng(seed);
  std::shuffle(pos.begin(), pos.end(), rng);
  std::shuffle(neg.begin(), neg.end(), rng);

  std::vector<std::size_t> fold_of(labels.size());
  std::size_t slot = 0;
  for (auto i : pos) fold_of[i] = slot++ % k;
  for (auto i : neg) fold_of[i] = slot++ % k;

  std::vector<preprocess::SplitPair> folds(k);
  for (auto& f : folds) f.seed = seed;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    for (std::size_t f = 0; f < k; ++f) (f == fold_of[i] ? folds[f].test : folds[f].train).push_back(i);
  }
  return folds;
}

CvScore cv_score(const learners::LearnerSpec& spec, const preprocess::FeatureFrame& frame,
                 const std::vector<preprocess::SplitPair>& folds, const ScoringOptions& scoring) {
  if (folds.empty()) throw DomainError("cv_score: no folds");
  spec.validate();
  CvScore out;
  for (std::size_t f = 0; f < folds.size(); ++f) {
    try {
      const auto train = frame.subset(folds[f].train);
      const auto test = frame.subset(folds[f].test);
      const auto model = learners::fit(spec, train);
      const auto probs = learners::predict_proba(model, test);
      out.fold_scores.push_back(
          metrics::score_metric(scoring.metric, probs, test.target, scoring.threshold, scoring.ece_bins));
    } catch (const std::exception& e) {
      throw Error("cv_score: fold " + std::to_string(f) + " failed: " + e.what());
    }
  }
  double sum = 0.0;
  for (double s : out.fold_scores) sum += s;
  out.mean = sum / static_cast<double>(out.fold_scores.size());
  if (out.fold_scores.size() > 1) {
    double ss = 0.0;
    for (double s : out.fold_scores) ss += (s - out.mean) * (s - out.mean);
    out.sd = std::sqrt(ss / static_cast<double>(out.fold_scores.size() - 1));
  }
  return out;
}

learners::LearnerSpec apply_config(learners::LearnerSpec base, const Config& config) {
  for (const auto& [name, value] : config) base.hyperparameters[name] = value;
  return base;
}

}  // namespace cvd::tuning
