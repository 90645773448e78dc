#include "cvdbench/tree.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "level_grower.hpp"
#include "parallel.hpp"
#include "serial.hpp"

namespace cvd::learners {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

SortedColumns::SortedColumns(const Matrix& x) : rows_(x.rows()), values_(x.cols()), order_(x.cols()) {
  for (std::size_t f = 0; f < x.cols(); ++f) {
    values_[f] = x.column(f);
    auto& order = order_[f];
    order.resize(rows_);
    std::iota(order.begin(), order.end(), std::uint32_t{0});
    const auto& v = values_[f];
    std::stable_sort(order.begin(), order.end(),
                     [&v](std::uint32_t a, std::uint32_t b) { return v[a] < v[b]; });
  }
}

std::size_t DecisionTree::leaf_of(std::span<const double> row) const {
  std::size_t i = 0;
  while (!nodes[i].is_leaf()) {
    const auto& n = nodes[i];
    i = row[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
  }
  return i;
}

std::size_t DecisionTree::depth() const {
  std::vector<std::size_t> level(nodes.size(), 0);
  std::size_t deepest = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    deepest = std::max(deepest, level[i]);
    if (!nodes[i].is_leaf()) {
      level[nodes[i].left] = level[i] + 1;
      level[nodes[i].right] = level[i] + 1;
    }
  }
  return deepest;
}

double split_gini(double pos_left, double neg_left, double pos_right, double neg_right) {
  const double n_left = pos_left + neg_left;
  const double n_right = pos_right + neg_right;
  return 2.0 * pos_left * neg_left / n_left + 2.0 * pos_right * neg_right / n_right;
}

DecisionTree grow_cart(const SortedColumns& data, std::span<const int> labels,
                       std::span<const double> weights, const CartParams& params,
                       std::uint64_t seed) {
  if (labels.size() != data.rows() || weights.size() != data.rows()) {
    throw SchemaError("cart: labels/weights do not match the training rows");
  }
  detail::GiniCriterion crit{labels, weights, params.min_samples_leaf};
  std::mt19937_64 rng(seed);
  return detail::grow_levelwise(data, crit, params.max_depth, params.max_features, &rng).tree;
}

std::vector<double> CartModel::predict_proba(const Matrix& rows) const {
  std::vector<double> out(rows.rows());
  for (std::size_t i = 0; i < rows.rows(); ++i) out[i] = tree_.predict(rows.row(i));
  return out;
}

void write_tree(std::ostream& out, const DecisionTree& tree) {
  out << "tree " << tree.nodes.size() << '\n';
  for (const auto& n : tree.nodes) {
    out << n.feature << ' ' << format_exact(n.threshold) << ' ' << n.left << ' ' << n.right << ' '
        << format_exact(n.value) << '\n';
  }
}

DecisionTree read_tree(std::istream& in) {
  serial::expect(in, "tree");
  DecisionTree tree;
  tree.nodes.resize(serial::read_size(in));
  for (auto& n : tree.nodes) {
    n.feature = static_cast<int>(serial::read_number(in));
    n.threshold = serial::read_number(in);
    n.left = static_cast<std::uint32_t>(serial::read_size(in));
    n.right = static_cast<std::uint32_t>(serial::read_size(in));
    n.value = serial::read_number(in);
    if (!n.is_leaf() && (n.left >= tree.nodes.size() || n.right >= tree.nodes.size())) {
      throw SchemaError("model file: tree child index out of range");
    }
  }
  if (tree.nodes.empty()) throw SchemaError("model file: empty tree");
  return tree;
}

void CartModel::save(std::ostream& out) const {
  out << "columns " << columns_ << '\n';
  write_tree(out, tree_);
}

std::shared_ptr<const CartModel> CartModel::load(std::istream& in) {
  serial::expect(in, "columns");
  const auto columns = serial::read_size(in);
  return std::make_shared<const CartModel>(read_tree(in), columns);
}

std::vector<double> RandomForestModel::predict_proba(const Matrix& rows) const {
  std::vector<double> out(rows.rows(), 0.0);
  for (std::size_t i = 0; i < rows.rows(); ++i) {
    const auto row = rows.row(i);
    double sum = 0.0;
    for (const auto& t : trees_) sum += t.predict(row);
    out[i] = sum / static_cast<double>(trees_.size());
  }
  return out;
}

void RandomForestModel::save(std::ostream& out) const {
  out << "columns " << columns_ << '\n' << "trees " << trees_.size() << '\n';
  for (const auto& t : trees_) write_tree(out, t);
}

std::shared_ptr<const RandomForestModel> RandomForestModel::load(std::istream& in) {
  serial::expect(in, "columns");
  const auto columns = serial::read_size(in);
  serial::expect(in, "trees");
  std::vector<DecisionTree> trees(serial::read_size(in));
  for (auto& t : trees) t = read_tree(in);
  return std::make_shared<const RandomForestModel>(std::move(trees), columns);
}

RandomForestModel fit_random_forest(const Matrix& x, std::span<const int> labels,
                                    const ForestParams& params, std::uint64_t seed) {
  if (params.n_trees == 0) throw ConfigError("random_forest: n_trees must be positive");
  const SortedColumns data(x);
  const std::size_t n = x.rows();
  CartParams tree_params = params.tree;
  if (tree_params.max_features == 0) {
    tree_params.max_features =
        std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(x.cols())))));
  }
  std::vector<DecisionTree> trees(params.n_trees);
  detail::parallel_for(params.n_trees, [&](std::size_t t) {
    const std::uint64_t tree_seed = mix_seed(seed, t);
    std::vector<double> weights(n, 1.0);
    if (params.bootstrap) {
      std::fill(weights.begin(), weights.end(), 0.0);
      std::mt19937_64 rng(mix_seed(tree_seed, 0));
      std::uniform_int_distribution<std::size_t> draw(0, n - 1);
      for (std::size_t i = 0; i < n; ++i) weights[draw(rng)] += 1.0;
    }
    trees[t] = grow_cart(data, labels, weights, tree_params, mix_seed(tree_seed, 1));
  });
  return RandomForestModel(std::move(trees), x.cols());
}

}  // namespace cvd::learners
