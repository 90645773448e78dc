#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "cvdbench/learners.hpp"

namespace cvd::learners {

/// Internal nodes send x[feature] <= threshold to `left`.
struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  std::uint32_t left = 0;
  std::uint32_t right = 0;
  double value = 0.0;  // leaf output

  bool is_leaf() const { return feature < 0; }
  bool operator==(const TreeNode&) const = default;
};

struct DecisionTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  std::size_t leaf_of(std::span<const double> row) const;
  double predict(std::span<const double> row) const { return nodes[leaf_of(row)].value; }
  std::size_t depth() const;

  bool operator==(const DecisionTree&) const = default;
};

/// Column-major copy of a training matrix with every feature's row order
/// sorted ascending (ties by row index). Built once, shared by all trees.
class SortedColumns {
 public:
  explicit SortedColumns(const Matrix& x);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return values_.size(); }
  double value(std::size_t feature, std::size_t row) const { return values_[feature][row]; }
  const std::vector<std::uint32_t>& order(std::size_t feature) const { return order_[feature]; }

 private:
  std::size_t rows_ = 0;
  std::vector<std::vector<double>> values_;
  std::vector<std::vector<std::uint32_t>> order_;
};

struct CartParams {
  std::size_t max_depth = 8;
  double min_samples_leaf = 5;
  std::size_t max_features = 0;  // per-split feature subsample; 0 = all
};

/// Greedy CART with weighted Gini. Candidate thresholds are midpoints of
/// adjacent distinct values inside the node; among equal scores the lowest
/// feature index, then the lowest threshold, wins. Impure nodes are split
/// whenever a split satisfying min_samples_leaf exists. `weights` are row
/// multiplicities (bootstrap counts); zero-weight rows are ignored.
DecisionTree grow_cart(const SortedColumns& data, std::span<const int> labels,
                       std::span<const double> weights, const CartParams& params,
                       std::uint64_t seed = 0);

/// Weighted Gini impurity of a binary split, scaled by the node weight:
/// 2 pL qL / nL + 2 pR qR / nR. Lower is better.
double split_gini(double pos_left, double neg_left, double pos_right, double neg_right);

class CartModel final : public Classifier {
 public:
  CartModel(DecisionTree tree, std::size_t columns) : tree_(std::move(tree)), columns_(columns) {}

  LearnerKind kind() const override { return LearnerKind::Cart; }
  std::size_t input_columns() const override { return columns_; }
  std::vector<double> predict_proba(const Matrix& rows) const override;
  void save(std::ostream& out) const override;
  static std::shared_ptr<const CartModel> load(std::istream& in);

  const DecisionTree& tree() const { return tree_; }

 private:
  DecisionTree tree_;
  std::size_t columns_;
};

struct ForestParams {
  std::size_t n_trees = 200;
  CartParams tree;  // max_features 0 here means floor(sqrt(d))
  bool bootstrap = true;
};

class RandomForestModel final : public Classifier {
 public:
  RandomForestModel(std::vector<DecisionTree> trees, std::size_t columns)
      : trees_(std::move(trees)), columns_(columns) {}

  LearnerKind kind() const override { return LearnerKind::RandomForest; }
  std::size_t input_columns() const override { return columns_; }
  std::vector<double> predict_proba(const Matrix& rows) const override;
  void save(std::ostream& out) const override;
  static std::shared_ptr<const RandomForestModel> load(std::istream& in);

  const std::vector<DecisionTree>& trees() const { return trees_; }

 private:
  std::vector<DecisionTree> trees_;
  std::size_t columns_;
};

/// Bagged CART ensemble; each tree draws its own seed from `seed`, so results
/// do not depend on how trees are scheduled across threads.
RandomForestModel fit_random_forest(const Matrix& x, std::span<const int> labels,
                                    const ForestParams& params, std::uint64_t seed);

void write_tree(std::ostream& out, const DecisionTree& tree);
DecisionTree read_tree(std::istream& in);

/// SplitMix64 step; used to derive independent child seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace cvd::learners
