#include "cvdbench/boosting.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "cvdbench/logistic.hpp"
#include "level_grower.hpp"
#include "serial.hpp"

namespace cvd::learners {
namespace {

double log_odds_base(std::span<const int> labels) {
  if (labels.empty()) throw DomainError("boosting: no training rows");
  const double pos = static_cast<double>(std::count(labels.begin(), labels.end(), 1));
  const double p = pos / static_cast<double>(labels.size());
  if (!(p > 0.0 && p < 1.0)) throw DomainError("boosting: both classes must be present");
  return std::log(p / (1.0 - p));
}

void gradients(std::span<const double> raw, std::span<const int> labels, std::vector<double>& g,
               std::vector<double>& h) {
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const double p = sigmoid(raw[i]);
    g[i] = p - static_cast<double>(labels[i]);
    h[i] = p * (1.0 - p);
  }
}

std::size_t category_of(std::span<const double> row, const std::vector<std::size_t>& onehot) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < onehot.size(); ++k) {
    if (row[onehot[k]] > row[onehot[best]]) best = k;
  }
  return best;
}

}  // namespace

double mean_logistic_loss(std::span<const double> raw, std::span<const int> labels) {
  double total = 0.0;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const double z = raw[i];
    total += std::max(z, 0.0) + std::log1p(std::exp(-std::fabs(z))) - (labels[i] == 1 ? z : 0.0);
  }
  return total / static_cast<double>(raw.size());
}

// ---- level-wise --------------------------------------------------------------

GbtLevelwiseModel fit_gbt_levelwise(const Matrix& x, std::span<const int> labels,
                                    const LevelwiseParams& params, BoostingTrace* trace) {
  if (x.rows() != labels.size()) throw SchemaError("gbt_levelwise: row count differs from label count");
  const double base = log_odds_base(labels);
  const std::size_t n = x.rows();
  const SortedColumns data(x);

  std::vector<double> raw(n, base);
  std::vector<double> g(n);
  std::vector<double> h(n);
  std::vector<DecisionTree> trees;
  trees.reserve(params.rounds);
  for (std::size_t round = 0; round < params.rounds; ++round) {
    gradients(raw, labels, g, h);
    detail::NewtonCriterion crit{g, h, params.lambda, params.gamma, params.min_child_weight};
    auto grown = detail::grow_levelwise(data, crit, params.max_depth, 0, nullptr);
    for (auto& node : grown.tree.nodes) {
      if (node.is_leaf()) node.value *= params.learning_rate;
    }
    for (std::size_t i = 0; i < n; ++i) {
      raw[i] += grown.tree.nodes[static_cast<std::size_t>(grown.leaf_of_row[i])].value;
    }
    trees.push_back(std::move(grown.tree));
    if (trace) trace->training_loss.push_back(mean_logistic_loss(raw, labels));
  }
  return GbtLevelwiseModel(base, std::move(trees), x.cols());
}

std::vector<double> GbtLevelwiseModel::raw_scores(const Matrix& rows, std::size_t rounds) const {
  const std::size_t used = std::min(rounds, trees_.size());
  std::vector<double> out(rows.rows(), base_score_);
  for (std::size_t i = 0; i < rows.rows(); ++i) {
    const auto row = rows.row(i);
    for (std::size_t t = 0; t < used; ++t) out[i] += trees_[t].predict(row);
  }
  return out;
}

std::vector<double> GbtLevelwiseModel::predict_proba(const Matrix& rows) const {
  auto raw = raw_scores(rows);
  for (double& v : raw) v = sigmoid(v);
  return raw;
}

void GbtLevelwiseModel::save(std::ostream& out) const {
  out << "columns " << columns_ << '\n' << "base_score " << format_exact(base_score_) << '\n';
  out << "trees " << trees_.size() << '\n';
  for (const auto& t : trees_) write_tree(out, t);
}

std::shared_ptr<const GbtLevelwiseModel> GbtLevelwiseModel::load(std::istream& in) {
  serial::expect(in, "columns");
  const auto columns = serial::read_size(in);
  serial::expect(in, "base_score");
  const double base = serial::read_number(in);
  serial::expect(in, "trees");
  std::vector<DecisionTree> trees(serial::read_size(in));
  for (auto& t : trees) t = read_tree(in);
  return std::make_shared<const GbtLevelwiseModel>(base, std::move(trees), columns);
}

// ---- oblivious ---------------------------------------------------------------

std::vector<double> ordered_target_statistics(std::span<const int> categories,
                                              std::span<const int> targets,
                                              std::span<const std::size_t> permutation,
                                              double prior, double prior_strength) {
  if (categories.size() != targets.size() || permutation.size() != targets.size()) {
    throw SchemaError("ordered_target_statistics: length mismatch");
  }
  if (!(prior_strength > 0.0)) throw DomainError("ordered_target_statistics: prior strength must be positive");
  std::vector<double> out(categories.size());
  std::vector<double> sum;
  std::vector<double> count;
  for (const auto row : permutation) {
    const int c = categories[row];
    if (c < 0) throw DomainError("ordered_target_statistics: negative category");
    const auto k = static_cast<std::size_t>(c);
    if (k >= sum.size()) {
      sum.resize(k + 1, 0.0);
      count.resize(k + 1, 0.0);
    }
    out[row] = (sum[k] + prior_strength * prior) / (count[k] + prior_strength);
    sum[k] += static_cast<double>(targets[row]);
    count[k] += 1.0;
  }
  return out;
}

std::size_t ObliviousTree::leaf_of(std::span<const double> row) const {
  std::size_t leaf = 0;
  for (std::size_t level = 0; level < features.size(); ++level) {
    if (row[static_cast<std::size_t>(features[level])] > thresholds[level]) leaf |= std::size_t{1} << level;
  }
  return leaf;
}

GbtObliviousModel fit_gbt_oblivious(const Matrix& x, std::span<const int> labels,
                                    std::span<const preprocess::OneHotGroup> groups,
                                    const ObliviousParams& params, std::uint64_t seed,
                                    BoostingTrace* trace) {
  if (x.rows() != labels.size()) throw SchemaError("gbt_oblivious: row count differs from label count");
  const double base = log_odds_base(labels);
  const std::size_t n = x.rows();
  const double prior = static_cast<double>(std::count(labels.begin(), labels.end(), 1)) /
                       static_cast<double>(n);

  // internal layout: passthrough columns, then one statistic column per group
  std::vector<char> collapsed(x.cols(), 0);
  std::vector<TargetStatisticColumn> ts_columns;
  if (params.ordered_ts) {
    for (const auto& g : groups) {
      for (auto c : g.columns) {
        if (c >= x.cols()) throw SchemaError("gbt_oblivious: one-hot column out of range");
        collapsed[c] = 1;
      }
      ts_columns.push_back({g.source, g.columns, {}});
    }
  }
  std::vector<std::size_t> passthrough;
  for (std::size_t c = 0; c < x.cols(); ++c) {
    if (!collapsed[c]) passthrough.push_back(c);
  }

  Matrix internal(n, passthrough.size() + ts_columns.size());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < passthrough.size(); ++j) internal(i, j) = x(i, passthrough[j]);
  }
  if (!ts_columns.empty()) {
    std::vector<std::size_t> permutation = iota_indices(n);
    std::mt19937_64 rng(mix_seed(seed, 0x75));
    std::shuffle(permutation.begin(), permutation.end(), rng);
    for (std::size_t t = 0; t < ts_columns.size(); ++t) {
      auto& ts = ts_columns[t];
      std::vector<int> categories(n);
      for (std::size_t i = 0; i < n; ++i) categories[i] = static_cast<int>(category_of(x.row(i), ts.onehot_columns));
      const auto encoded = ordered_target_statistics(categories, labels, permutation, prior, params.prior_strength);
      for (std::size_t i = 0; i < n; ++i) internal(i, passthrough.size() + t) = encoded[i];
      std::vector<double> sum(ts.onehot_columns.size(), 0.0);
      std::vector<double> count(ts.onehot_columns.size(), 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        sum[static_cast<std::size_t>(categories[i])] += labels[i];
        count[static_cast<std::size_t>(categories[i])] += 1.0;
      }
      for (std::size_t k = 0; k < sum.size(); ++k) {
        ts.level_encoding.push_back((sum[k] + params.prior_strength * prior) /
                                    (count[k] + params.prior_strength));
      }
    }
  }

  const SortedColumns data(internal);
  const std::size_t d = internal.cols();
  const double lambda = params.lambda;
  auto structure = [lambda](double g, double h) { return g * g / (h + lambda); };

  std::vector<double> raw(n, base);
  std::vector<double> g(n);
  std::vector<double> h(n);
  std::vector<std::uint32_t> leaf(n);
  std::vector<ObliviousTree> trees;
  trees.reserve(params.rounds);

  for (std::size_t round = 0; round < params.rounds; ++round) {
    gradients(raw, labels, g, h);
    std::fill(leaf.begin(), leaf.end(), 0);
    ObliviousTree tree;
    for (std::size_t level = 0; level < params.depth; ++level) {
      const std::size_t leaves = std::size_t{1} << level;
      std::vector<double> G(leaves, 0.0);
      std::vector<double> H(leaves, 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        G[leaf[i]] += g[i];
        H[leaf[i]] += h[i];
      }
      double parent_total = 0.0;
      for (std::size_t l = 0; l < leaves; ++l) parent_total += structure(G[l], H[l]);

      double best_gain = 0.0;
      int best_feature = -1;
      double best_threshold = 0.0;
      std::vector<double> GL(leaves);
      std::vector<double> HL(leaves);
      std::vector<double> contribution(leaves);
      for (std::size_t f = 0; f < d; ++f) {
        std::fill(GL.begin(), GL.end(), 0.0);
        std::fill(HL.begin(), HL.end(), 0.0);
        for (std::size_t l = 0; l < leaves; ++l) contribution[l] = structure(G[l], H[l]);
        double total = parent_total;
        bool has_last = false;
        double last = 0.0;
        for (const auto r : data.order(f)) {
          const double v = data.value(f, r);
          if (has_last && v > last) {
            const double gain = 0.5 * (total - parent_total);
            if (gain > best_gain) {
              best_gain = gain;
              best_feature = static_cast<int>(f);
              best_threshold = detail::midpoint(last, v);
            }
          }
          const auto l = leaf[r];
          GL[l] += g[r];
          HL[l] += h[r];
          const double updated = structure(GL[l], HL[l]) + structure(G[l] - GL[l], H[l] - HL[l]);
          total += updated - contribution[l];
          contribution[l] = updated;
          last = v;
          has_last = true;
        }
      }
      if (best_feature < 0) break;
      tree.features.push_back(best_feature);
      tree.thresholds.push_back(best_threshold);
      for (std::size_t i = 0; i < n; ++i) {
        if (data.value(static_cast<std::size_t>(best_feature), i) > best_threshold) {
          leaf[i] |= static_cast<std::uint32_t>(1u << level);
        }
      }
    }
    const std::size_t leaves = std::size_t{1} << tree.features.size();
    std::vector<double> G(leaves, 0.0);
    std::vector<double> H(leaves, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      G[leaf[i]] += g[i];
      H[leaf[i]] += h[i];
    }
    tree.leaf_values.resize(leaves);
    for (std::size_t l = 0; l < leaves; ++l) tree.leaf_values[l] = -G[l] / (H[l] + lambda) * params.learning_rate;
    for (std::size_t i = 0; i < n; ++i) raw[i] += tree.leaf_values[leaf[i]];
    trees.push_back(std::move(tree));
    if (trace) trace->training_loss.push_back(mean_logistic_loss(raw, labels));
  }
  return GbtObliviousModel(x.cols(), std::move(passthrough), std::move(ts_columns), base, std::move(trees));
}

Matrix GbtObliviousModel::internal_features(const Matrix& rows) const {
  Matrix out(rows.rows(), passthrough_.size() + ts_columns_.size());
  for (std::size_t i = 0; i < rows.rows(); ++i) {
    const auto row = rows.row(i);
    for (std::size_t j = 0; j < passthrough_.size(); ++j) out(i, j) = row[passthrough_[j]];
    for (std::size_t t = 0; t < ts_columns_.size(); ++t) {
      const auto& ts = ts_columns_[t];
      out(i, passthrough_.size() + t) = ts.level_encoding[category_of(row, ts.onehot_columns)];
    }
  }
  return out;
}

std::vector<double> GbtObliviousModel::raw_scores(const Matrix& rows, std::size_t rounds) const {
  const Matrix internal = internal_features(rows);
  const std::size_t used = std::min(rounds, trees_.size());
  std::vector<double> out(rows.rows(), base_score_);
  for (std::size_t i = 0; i < rows.rows(); ++i) {
    const auto row = internal.row(i);
    for (std::size_t t = 0; t < used; ++t) out[i] += trees_[t].leaf_values[trees_[t].leaf_of(row)];
  }
  return out;
}

std::vector<double> GbtObliviousModel::predict_proba(const Matrix& rows) const {
  auto raw = raw_scores(rows);
  for (double& v : raw) v = sigmoid(v);
  return raw;
}

void GbtObliviousModel::save(std::ostream& out) const {
  out << "columns " << columns_ << '\n' << "base_score " << format_exact(base_score_) << '\n';
  out << "passthrough " << passthrough_.size();
  for (auto c : passthrough_) out << ' ' << c;
  out << '\n' << "target_statistics " << ts_columns_.size() << '\n';
  for (const auto& ts : ts_columns_) {
    out << "group " << ts.source << ' ' << ts.onehot_columns.size();
    for (auto c : ts.onehot_columns) out << ' ' << c;
    out << '\n';
    serial::write_list(out, "encoding", ts.level_encoding);
  }
  out << "trees " << trees_.size() << '\n';
  for (const auto& t : trees_) {
    out << "oblivious " << t.features.size();
    for (std::size_t l = 0; l < t.features.size(); ++l) {
      out << ' ' << t.features[l] << ' ' << format_exact(t.thresholds[l]);
    }
    out << '\n';
    serial::write_list(out, "leaves", t.leaf_values);
  }
}

std::shared_ptr<const GbtObliviousModel> GbtObliviousModel::load(std::istream& in) {
  serial::expect(in, "columns");
  const auto columns = serial::read_size(in);
  serial::expect(in, "base_score");
  const double base = serial::read_number(in);
  serial::expect(in, "passthrough");
  std::vector<std::size_t> passthrough(serial::read_size(in));
  for (auto& c : passthrough) c = serial::read_size(in);
  serial::expect(in, "target_statistics");
  std::vector<TargetStatisticColumn> ts_columns(serial::read_size(in));
  for (auto& ts : ts_columns) {
    serial::expect(in, "group");
    ts.source = serial::read_token(in);
    ts.onehot_columns.resize(serial::read_size(in));
    for (auto& c : ts.onehot_columns) c = serial::read_size(in);
    ts.level_encoding = serial::read_list(in, "encoding");
  }
  serial::expect(in, "trees");
  std::vector<ObliviousTree> trees(serial::read_size(in));
  for (auto& t : trees) {
    serial::expect(in, "oblivious");
    const auto depth = serial::read_size(in);
    for (std::size_t l = 0; l < depth; ++l) {
      t.features.push_back(static_cast<int>(serial::read_size(in)));
      t.thresholds.push_back(serial::read_number(in));
    }
    t.leaf_values = serial::read_list(in, "leaves");
    if (t.leaf_values.size() != (std::size_t{1} << depth)) {
      throw SchemaError("model file: oblivious tree leaf count mismatch");
    }
  }
  return std::make_shared<const GbtObliviousModel>(columns, std::move(passthrough), std::move(ts_columns),
                                                   base, std::move(trees));
}

}  // namespace cvd::learners
