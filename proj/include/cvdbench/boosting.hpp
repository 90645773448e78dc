#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "cvdbench/preprocess.hpp"
#include "cvdbench/tree.hpp"

namespace cvd::learners {

/// Logistic-loss Newton boosting with level-wise trees.
struct LevelwiseParams {
  std::size_t rounds = 300;
  double learning_rate = 0.1;
  std::size_t max_depth = 6;
  double lambda = 1.0;
  double gamma = 0.0;
  double min_child_weight = 1.0;
};

class GbtLevelwiseModel final : public Classifier {
 public:
  GbtLevelwiseModel(double base_score, std::vector<DecisionTree> trees, std::size_t columns)
      : base_score_(base_score), trees_(std::move(trees)), columns_(columns) {}

  LearnerKind kind() const override { return LearnerKind::GbtLevelwise; }
  std::size_t input_columns() const override { return columns_; }
  std::vector<double> predict_proba(const Matrix& rows) const override;
  void save(std::ostream& out) const override;
  static std::shared_ptr<const GbtLevelwiseModel> load(std::istream& in);

  /// Summed raw score using the first `rounds` trees (all by default).
  std::vector<double> raw_scores(const Matrix& rows, std::size_t rounds = SIZE_MAX) const;
  double base_score() const { return base_score_; }
  const std::vector<DecisionTree>& trees() const { return trees_; }

 private:
  double base_score_;
  std::vector<DecisionTree> trees_;  // leaf values already scaled by the learning rate
  std::size_t columns_;
};

struct BoostingTrace {
  std::vector<double> training_loss;  // mean logistic loss after each round
};

GbtLevelwiseModel fit_gbt_levelwise(const Matrix& x, std::span<const int> labels,
                                    const LevelwiseParams& params, BoostingTrace* trace = nullptr);

/// Ordered target statistics: visiting rows in `permutation` order, a row's
/// encoding is (sum of earlier targets in its category + a*prior) /
/// (earlier count in its category + a). Result is indexed by row.
std::vector<double> ordered_target_statistics(std::span<const int> categories,
                                              std::span<const int> targets,
                                              std::span<const std::size_t> permutation,
                                              double prior, double prior_strength);

/// One (feature, threshold) per level; leaf index bit `level` is set when
/// x[feature] > threshold at that level.
struct ObliviousTree {
  std::vector<int> features;
  std::vector<double> thresholds;
  std::vector<double> leaf_values;  // 2^depth entries, scaled by the learning rate

  std::size_t leaf_of(std::span<const double> row) const;
  bool operator==(const ObliviousTree&) const = default;
};

/// A one-hot group collapsed into a single target-statistic column.
struct TargetStatisticColumn {
  std::string source;
  std::vector<std::size_t> onehot_columns;
  std::vector<double> level_encoding;  // full-training statistic per level, used at prediction
};

struct ObliviousParams {
  std::size_t rounds = 500;
  double learning_rate = 0.05;
  std::size_t depth = 6;
  double lambda = 3.0;
  bool ordered_ts = true;
  double prior_strength = 1.0;
};

class GbtObliviousModel final : public Classifier {
 public:
  GbtObliviousModel(std::size_t columns, std::vector<std::size_t> passthrough,
                    std::vector<TargetStatisticColumn> ts_columns, double base_score,
                    std::vector<ObliviousTree> trees)
      : columns_(columns),
        passthrough_(std::move(passthrough)),
        ts_columns_(std::move(ts_columns)),
        base_score_(base_score),
        trees_(std::move(trees)) {}

  LearnerKind kind() const override { return LearnerKind::GbtOblivious; }
  std::size_t input_columns() const override { return columns_; }
  std::vector<double> predict_proba(const Matrix& rows) const override;
  void save(std::ostream& out) const override;
  static std::shared_ptr<const GbtObliviousModel> load(std::istream& in);

  std::vector<double> raw_scores(const Matrix& rows, std::size_t rounds = SIZE_MAX) const;
  /// Internal feature layout used by the trees (passthrough columns, then one
  /// target-statistic column per collapsed group).
  Matrix internal_features(const Matrix& rows) const;
  const std::vector<ObliviousTree>& trees() const { return trees_; }
  const std::vector<TargetStatisticColumn>& target_statistic_columns() const { return ts_columns_; }
  double base_score() const { return base_score_; }

 private:
  std::size_t columns_;
  std::vector<std::size_t> passthrough_;
  std::vector<TargetStatisticColumn> ts_columns_;
  double base_score_;
  std::vector<ObliviousTree> trees_;
};

/// `groups` lists the one-hot groups to collapse into ordered target
/// statistics (ignored when params.ordered_ts is false).
GbtObliviousModel fit_gbt_oblivious(const Matrix& x, std::span<const int> labels,
                                    std::span<const preprocess::OneHotGroup> groups,
                                    const ObliviousParams& params, std::uint64_t seed,
                                    BoostingTrace* trace = nullptr);

/// Mean logistic loss of raw scores.
double mean_logistic_loss(std::span<const double> raw, std::span<const int> labels);

}  // namespace cvd::learners
