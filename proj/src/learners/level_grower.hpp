#pragma once

// Level-wise exact greedy tree growth over presorted columns. Each level is
// one pass per feature over the sorted row order, accumulating left-side
// statistics for every frontier node at once.

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

#include "cvdbench/tree.hpp"

namespace cvd::learners::detail {

struct GrowResult {
  DecisionTree tree;
  std::vector<std::int32_t> leaf_of_row;  // -1 for inactive rows
};

inline double midpoint(double lo, double hi) {
  const double t = lo + (hi - lo) * 0.5;
  return t < hi ? t : lo;
}

template <typename Criterion>
GrowResult grow_levelwise(const SortedColumns& data, const Criterion& crit, std::size_t max_depth,
                          std::size_t max_features, std::mt19937_64* rng) {
  using Stats = typename Criterion::Stats;
  const std::size_t n = data.rows();
  const std::size_t d = data.cols();

  GrowResult result;
  auto& nodes = result.tree.nodes;
  std::vector<Stats> node_stats;
  std::vector<std::int32_t> row_node(n, -1);

  Stats root{};
  for (std::size_t r = 0; r < n; ++r) {
    if (crit.active(r)) {
      row_node[r] = 0;
      crit.add(root, r);
    }
  }
  nodes.emplace_back();
  node_stats.push_back(root);

  std::vector<std::uint32_t> frontier;
  if (max_depth > 0 && crit.can_split(root)) frontier.push_back(0);

  const bool use_mask = max_features > 0 && max_features < d && rng != nullptr;
  std::vector<std::int32_t> slot_of;
  std::vector<char> mask;
  std::vector<char> feature_used(d);
  std::vector<std::size_t> feature_pool(d);

  struct Best {
    double score = -std::numeric_limits<double>::infinity();
    int feature = -1;
    double threshold = 0.0;
    Stats left{};
  };

  for (std::size_t depth = 0; depth < max_depth && !frontier.empty(); ++depth) {
    const std::size_t m = frontier.size();
    slot_of.assign(nodes.size(), -1);
    for (std::size_t s = 0; s < m; ++s) slot_of[frontier[s]] = static_cast<std::int32_t>(s);

    if (use_mask) {
      mask.assign(m * d, 0);
      std::fill(feature_used.begin(), feature_used.end(), 0);
      for (std::size_t s = 0; s < m; ++s) {
        std::iota(feature_pool.begin(), feature_pool.end(), std::size_t{0});
        for (std::size_t i = 0; i < max_features; ++i) {
          std::uniform_int_distribution<std::size_t> pick(i, d - 1);
          std::swap(feature_pool[i], feature_pool[pick(*rng)]);
          mask[s * d + feature_pool[i]] = 1;
          feature_used[feature_pool[i]] = 1;
        }
      }
    }

    std::vector<Best> best(m);
    std::vector<Stats> left(m);
    std::vector<double> last(m);
    std::vector<char> has_last(m);

    for (std::size_t f = 0; f < d; ++f) {
      if (use_mask && !feature_used[f]) continue;
      std::fill(left.begin(), left.end(), Stats{});
      std::fill(has_last.begin(), has_last.end(), 0);
      for (const auto r : data.order(f)) {
        const auto nd = row_node[r];
        if (nd < 0) continue;
        const auto slot = slot_of[static_cast<std::size_t>(nd)];
        if (slot < 0) continue;
        const auto s = static_cast<std::size_t>(slot);
        if (use_mask && !mask[s * d + f]) continue;
        const double x = data.value(f, r);
        if (has_last[s] && x > last[s]) {
          const Stats& parent = node_stats[frontier[s]];
          const Stats right = parent - left[s];
          if (crit.valid(left[s], right)) {
            const double score = crit.score(left[s], right, parent);
            if (score > best[s].score) {
              best[s] = {score, static_cast<int>(f), midpoint(last[s], x), left[s]};
            }
          }
        }
        crit.add(left[s], r);
        last[s] = x;
        has_last[s] = 1;
      }
    }

    std::vector<std::uint32_t> next;
    for (std::size_t s = 0; s < m; ++s) {
      const auto id = frontier[s];
      const Best& b = best[s];
      if (b.feature < 0 || !crit.accept(b.score)) continue;
      const Stats parent = node_stats[id];
      const auto l = static_cast<std::uint32_t>(nodes.size());
      nodes[id].feature = b.feature;
      nodes[id].threshold = b.threshold;
      nodes[id].left = l;
      nodes[id].right = l + 1;
      nodes.emplace_back();
      nodes.emplace_back();
      node_stats.push_back(b.left);
      node_stats.push_back(parent - b.left);
      if (crit.can_split(node_stats[l])) next.push_back(l);
      if (crit.can_split(node_stats[l + 1])) next.push_back(l + 1);
    }
    for (std::size_t r = 0; r < n; ++r) {
      const auto nd = row_node[r];
      if (nd < 0) continue;
      const TreeNode& node = nodes[static_cast<std::size_t>(nd)];
      if (node.is_leaf()) continue;
      row_node[r] = static_cast<std::int32_t>(
          data.value(static_cast<std::size_t>(node.feature), r) <= node.threshold ? node.left
                                                                                    : node.right);
    }
    frontier = std::move(next);
  }

  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].is_leaf()) nodes[i].value = crit.leaf_value(node_stats[i]);
  }
  result.leaf_of_row = std::move(row_node);
  return result;
}

struct GiniCriterion {
  struct Stats {
    double pos = 0.0;
    double neg = 0.0;
    double count() const { return pos + neg; }
    friend Stats operator-(const Stats& a, const Stats& b) { return {a.pos - b.pos, a.neg - b.neg}; }
  };

  std::span<const int> labels;
  std::span<const double> weights;
  double min_leaf = 1.0;

  bool active(std::size_t r) const { return weights[r] > 0.0; }
  void add(Stats& s, std::size_t r) const {
    if (labels[r] == 1) {
      s.pos += weights[r];
    } else {
      s.neg += weights[r];
    }
  }
  bool can_split(const Stats& s) const {
    return s.pos > 0.0 && s.neg > 0.0 && s.count() >= 2.0 * min_leaf;
  }
  bool valid(const Stats& l, const Stats& r) const {
    return l.count() >= min_leaf && r.count() >= min_leaf;
  }
  double score(const Stats& l, const Stats& r, const Stats&) const {
    return -split_gini(l.pos, l.neg, r.pos, r.neg);
  }
  bool accept(double) const { return true; }
  double leaf_value(const Stats& s) const { return s.count() > 0.0 ? s.pos / s.count() : 0.0; }
};

struct NewtonCriterion {
  struct Stats {
    double g = 0.0;
    double h = 0.0;
    double count = 0.0;
    friend Stats operator-(const Stats& a, const Stats& b) {
      return {a.g - b.g, a.h - b.h, a.count - b.count};
    }
  };

  std::span<const double> grad;
  std::span<const double> hess;
  double lambda = 1.0;
  double gamma = 0.0;
  double min_child_weight = 1.0;

  bool active(std::size_t) const { return true; }
  void add(Stats& s, std::size_t r) const {
    s.g += grad[r];
    s.h += hess[r];
    s.count += 1.0;
  }
  bool can_split(const Stats& s) const { return s.count >= 2.0; }
  bool valid(const Stats& l, const Stats& r) const {
    return l.count >= 1.0 && r.count >= 1.0 && l.h >= min_child_weight && r.h >= min_child_weight;
  }
  double structure(const Stats& s) const { return s.g * s.g / (s.h + lambda); }
  double score(const Stats& l, const Stats& r, const Stats& p) const {
    return 0.5 * (structure(l) + structure(r) - structure(p)) - gamma;
  }
  bool accept(double score) const { return score > 0.0; }
  double leaf_value(const Stats& s) const { return -s.g / (s.h + lambda); }
};

}  // namespace cvd::learners::detail
