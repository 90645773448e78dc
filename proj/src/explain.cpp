#include "cvdbench/explain.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "cvdbench/tree.hpp"

namespace cvd::explain {

std::uint64_t stable_hash(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::vector<FeatureGroup> feature_groups(const std::vector<std::string>& column_names,
                                         const std::vector<preprocess::OneHotGroup>& categorical_map) {
  std::vector<int> group_of(column_names.size(), -1);
  for (std::size_t g = 0; g < categorical_map.size(); ++g) {
    for (auto c : categorical_map[g].columns) {
      if (c >= column_names.size()) throw SchemaError("one-hot group column out of range");
      group_of[c] = static_cast<int>(g);
    }
  }
  std::vector<FeatureGroup> out;
  std::vector<char> emitted(categorical_map.size(), 0);
  for (std::size_t c = 0; c < column_names.size(); ++c) {
    if (group_of[c] < 0) {
      out.push_back({column_names[c], {c}});
      continue;
    }
    const auto g = static_cast<std::size_t>(group_of[c]);
    if (emitted[g]) continue;
    emitted[g] = 1;
    out.push_back({categorical_map[g].source, categorical_map[g].columns});
  }
  return out;
}

std::vector<FeatureGroup> singleton_groups(const std::vector<std::string>& column_names) {
  std::vector<FeatureGroup> out;
  for (std::size_t c = 0; c < column_names.size(); ++c) out.push_back({column_names[c], {c}});
  return out;
}

std::vector<std::string> ImportanceReport::ranking() const {
  std::vector<std::size_t> order = iota_indices(entries.size());
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return entries[a].mean_drop > entries[b].mean_drop; });
  std::vector<std::string> out;
  for (auto i : order) out.push_back(entries[i].feature);
  return out;
}

ImportanceReport permutation_importance(const PredictFn& predict, const Matrix& x, std::span<const int> labels,
                                        const std::vector<FeatureGroup>& groups,
                                        const tuning::ScoringOptions& scoring, std::size_t repeats,
                                        std::uint64_t seed) {
  if (repeats == 0) throw DomainError("permutation_importance: repeats must be at least 1");
  if (x.rows() != labels.size()) throw SchemaError("permutation_importance: row count differs from label count");
  auto score = [&](const std::vector<double>& probs) {
    return metrics::score_metric(scoring.metric, probs, labels, scoring.threshold, scoring.ece_bins);
  };
  ImportanceReport report;
  report.metric = std::string(metrics::to_string(scoring.metric));
  report.repeats = repeats;
  report.seed = seed;
  report.baseline = score(predict(x));

  const std::size_t n = x.rows();
  Matrix permuted = x;
  std::vector<std::size_t> order(n);
  for (const auto& g : groups) {
    ImportanceEntry entry;
    entry.feature = g.name;
    std::vector<double> drops;
    const std::uint64_t group_seed = learners::mix_seed(seed, stable_hash(g.name));
    for (std::size_t r = 0; r < repeats; ++r) {
      std::iota(order.begin(), order.end(), std::size_t{0});
      std::mt19937_64 rng(learners::mix_seed(group_seed, r));
      std::shuffle(order.begin(), order.end(), rng);
      for (std::size_t i = 0; i < n; ++i) {
        for (auto c : g.columns) permuted(i, c) = x(order[i], c);
      }
      try {
        drops.push_back(report.baseline - score(predict(permuted)));
      } catch (const DomainError&) {
        ++entry.skipped;
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      for (auto c : g.columns) permuted(i, c) = x(i, c);
    }
    if (!drops.empty()) {
      entry.mean_drop = std::accumulate(drops.begin(), drops.end(), 0.0) / static_cast<double>(drops.size());
      if (drops.size() > 1) {
        double ss = 0.0;
        for (double d : drops) ss += (d - entry.mean_drop) * (d - entry.mean_drop);
        entry.sd = std::sqrt(ss / static_cast<double>(drops.size() - 1));
      }
    } else {
      entry.mean_drop = std::numeric_limits<double>::quiet_NaN();
    }
    report.entries.push_back(entry);
  }
  return report;
}

ImportanceReport permutation_importance(const learners::ModelHandle& model, const preprocess::FeatureFrame& frame,
                                        const tuning::ScoringOptions& scoring, std::size_t repeats,
                                        std::uint64_t seed) {
  if (model.columns() != frame.column_names) {
    throw SchemaError("permutation_importance: frame columns do not match the model");
  }
  const PredictFn predict = [&model](const Matrix& rows) { return learners::predict_proba(model, rows); };
  return permutation_importance(predict, frame.matrix, frame.target,
                                feature_groups(frame.column_names, frame.categorical_map), scoring, repeats, seed);
}

double ShapleyAttribution::efficiency_gap() const {
  return std::accumulate(phi.begin(), phi.end(), 0.0) + base - output;
}

ShapleyAttribution shapley_mc(const PredictFn& predict, std::span<const double> instance, const Matrix& background,
                              const std::vector<FeatureGroup>& groups, std::size_t n_samples, std::uint64_t seed,
                              std::size_t instance_index) {
  const std::size_t b = background.rows();
  const std::size_t d = background.cols();
  if (b < 32) throw DomainError("shapley_mc: background needs at least 32 rows");
  if (instance.size() != d) throw SchemaError("shapley_mc: instance width differs from background");
  if (n_samples == 0) throw DomainError("shapley_mc: n_samples must be at least 1");
  const std::size_t g = groups.size();

  ShapleyAttribution out;
  out.instance = instance_index;
  out.samples = n_samples;
  for (const auto& grp : groups) out.features.push_back(grp.name);
  {
    const auto base_out = predict(background);
    out.base = std::accumulate(base_out.begin(), base_out.end(), 0.0) / static_cast<double>(b);
    Matrix one(1, d);
    std::copy(instance.begin(), instance.end(), one.row(0).begin());
    out.output = predict(one)[0];
  }

  std::mt19937_64 rng(seed);
  std::vector<std::size_t> visit = iota_indices(b);
  std::shuffle(visit.begin(), visit.end(), rng);
  std::vector<std::size_t> perm = iota_indices(g);

  std::vector<double> sum(g, 0.0);
  std::vector<double> sum_sq(g, 0.0);
  constexpr std::size_t kChunk = 128;
  std::vector<std::vector<std::size_t>> chunk_perms;
  for (std::size_t start = 0; start < n_samples; start += kChunk) {
    const std::size_t count = std::min(kChunk, n_samples - start);
    Matrix rows(count * (g + 1), d);
    chunk_perms.assign(count, {});
    for (std::size_t s = 0; s < count; ++s) {
      std::shuffle(perm.begin(), perm.end(), rng);
      chunk_perms[s] = perm;
      const auto z = background.row(visit[(start + s) % b]);
      auto first = rows.row(s * (g + 1));
      std::copy(z.begin(), z.end(), first.begin());
      for (std::size_t step = 0; step < g; ++step) {
        auto prev = rows.row(s * (g + 1) + step);
        auto cur = rows.row(s * (g + 1) + step + 1);
        std::copy(prev.begin(), prev.end(), cur.begin());
        for (auto c : groups[perm[step]].columns) cur[c] = instance[c];
      }
    }
    const auto outputs = predict(rows);
    for (std::size_t s = 0; s < count; ++s) {
      for (std::size_t step = 0; step < g; ++step) {
        const double delta = outputs[s * (g + 1) + step + 1] - outputs[s * (g + 1) + step];
        const auto f = chunk_perms[s][step];
        sum[f] += delta;
        sum_sq[f] += delta * delta;
      }
    }
  }
  const double ns = static_cast<double>(n_samples);
  out.phi.resize(g);
  out.std_error.resize(g);
  for (std::size_t f = 0; f < g; ++f) {
    out.phi[f] = sum[f] / ns;
    const double var = n_samples > 1 ? std::max(0.0, (sum_sq[f] - ns * out.phi[f] * out.phi[f]) / (ns - 1.0)) : 0.0;
    out.std_error[f] = std::sqrt(var / ns);
  }
  return out;
}

std::vector<std::size_t> stratified_sample(std::span<const int> labels, std::size_t size, std::uint64_t seed) {
  const std::size_t n = labels.size();
  if (size >= n) return iota_indices(n);
  std::vector<std::size_t> pos;
  std::vector<std::size_t> neg;
  for (std::size_t i = 0; i < n; ++i) (labels[i] == 1 ? pos : neg).push_back(i);
  std::mt19937_64 rng(seed);
  std::shuffle(pos.begin(), pos.end(), rng);
  std::shuffle(neg.begin(), neg.end(), rng);
  auto take_pos = static_cast<std::size_t>(
      std::llround(static_cast<double>(size) * static_cast<double>(pos.size()) / static_cast<double>(n)));
  if (size >= 2 && !pos.empty() && !neg.empty()) take_pos = std::clamp<std::size_t>(take_pos, 1, size - 1);
  take_pos = std::min(take_pos, pos.size());
  const std::size_t take_neg = std::min(size - take_pos, neg.size());
  std::vector<std::size_t> out(pos.begin(), pos.begin() + static_cast<std::ptrdiff_t>(take_pos));
  out.insert(out.end(), neg.begin(), neg.begin() + static_cast<std::ptrdiff_t>(take_neg));
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace cvd::explain
