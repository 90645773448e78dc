#include "cvdbench/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "cvdbench/common.hpp"

namespace cvd::metrics {
namespace {

void check_lengths(std::span<const double> probs, std::span<const int> labels, const char* what) {
  if (probs.size() != labels.size()) {
    throw SchemaError(std::string(what) + ": " + std::to_string(probs.size()) + " scores but " +
                      std::to_string(labels.size()) + " labels");
  }
  if (probs.empty()) throw SchemaError(std::string(what) + ": empty input");
}

}  // namespace

ConfusionMatrix confusion(std::span<const double> probs, std::span<const int> labels, double threshold) {
  check_lengths(probs, labels, "confusion");
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const bool predicted = probs[i] >= threshold;
    if (labels[i] == 1) {
      predicted ? ++cm.tp : ++cm.fn;
    } else {
      predicted ? ++cm.fp : ++cm.tn;
    }
  }
  return cm;
}

ThresholdMetrics threshold_metrics(const ConfusionMatrix& cm) {
  if (cm.total() == 0) throw DomainError("threshold_metrics: empty confusion matrix");
  ThresholdMetrics m;
  const auto tp = static_cast<double>(cm.tp);
  m.accuracy = static_cast<double>(cm.tp + cm.tn) / static_cast<double>(cm.total());
  m.precision_undefined = cm.tp + cm.fp == 0;
  m.recall_undefined = cm.tp + cm.fn == 0;
  m.precision = m.precision_undefined ? 0.0 : tp / static_cast<double>(cm.tp + cm.fp);
  m.recall = m.recall_undefined ? 0.0 : tp / static_cast<double>(cm.tp + cm.fn);
  m.f1 = m.precision + m.recall > 0.0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
  return m;
}

double roc_auc(std::span<const double> scores, std::span<const int> labels) {
  check_lengths(scores, labels, "roc_auc");
  const std::size_t n = scores.size();
  std::vector<std::size_t> order = iota_indices(n);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  double rank_sum = 0.0;
  std::size_t positives = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j + 1);
    for (std::size_t k = i; k <= j; ++k) {
      if (labels[order[k]] == 1) {
        rank_sum += avg_rank;
        ++positives;
      }
    }
    i = j + 1;
  }
  const std::size_t negatives = n - positives;
  if (positives == 0 || negatives == 0) throw DomainError("roc_auc: both classes must be present");
  const double np = static_cast<double>(positives);
  return (rank_sum - np * (np + 1.0) / 2.0) / (np * static_cast<double>(negatives));
}

double brier(std::span<const double> probs, std::span<const int> labels) {
  check_lengths(probs, labels, "brier");
  double s = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const double d = probs[i] - static_cast<double>(labels[i]);
    s += d * d;
  }
  return s / static_cast<double>(probs.size());
}

std::size_t bin_index(double prob, std::size_t n_bins) {
  if (n_bins == 0) throw DomainError("bin_index: n_bins must be at least 1");
  if (!(prob >= 0.0 && prob <= 1.0)) throw DomainError("probability outside [0, 1]");
  const double nb = static_cast<double>(n_bins);
  auto b = static_cast<std::ptrdiff_t>(std::ceil(prob * nb)) - 1;
  b = std::clamp<std::ptrdiff_t>(b, 0, static_cast<std::ptrdiff_t>(n_bins) - 1);
  // correct for rounding in prob * n so the edges k / n are honoured exactly
  while (b > 0 && prob <= static_cast<double>(b) / nb) --b;
  while (b + 1 < static_cast<std::ptrdiff_t>(n_bins) && prob > static_cast<double>(b + 1) / nb) ++b;
  return static_cast<std::size_t>(b);
}

std::vector<ReliabilityPoint> reliability_curve(std::span<const double> probs, std::span<const int> labels,
                                                std::size_t n_bins) {
  check_lengths(probs, labels, "reliability_curve");
  std::vector<double> conf(n_bins, 0.0);
  std::vector<double> hits(n_bins, 0.0);
  std::vector<std::size_t> count(n_bins, 0);
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const auto b = bin_index(probs[i], n_bins);
    conf[b] += probs[i];
    hits[b] += labels[i] == 1 ? 1.0 : 0.0;
    ++count[b];
  }
  std::vector<ReliabilityPoint> out;
  const double nb = static_cast<double>(n_bins);
  for (std::size_t b = 0; b < n_bins; ++b) {
    if (count[b] == 0) continue;
    const double c = static_cast<double>(count[b]);
    out.push_back({static_cast<double>(b) / nb, static_cast<double>(b + 1) / nb, conf[b] / c, hits[b] / c, count[b]});
  }
  return out;
}

double ece_from_points(std::span<const ReliabilityPoint> points) {
  std::size_t n = 0;
  for (const auto& p : points) n += p.count;
  if (n == 0) return 0.0;
  double e = 0.0;
  for (const auto& p : points) {
    e += static_cast<double>(p.count) / static_cast<double>(n) * std::fabs(p.mean_confidence - p.frequency);
  }
  return e;
}

double ece(std::span<const double> probs, std::span<const int> labels, std::size_t n_bins) {
  return ece_from_points(reliability_curve(probs, labels, n_bins));
}

std::vector<RocPoint> roc_curve(std::span<const double> scores, std::span<const int> labels) {
  check_lengths(scores, labels, "roc_curve");
  const std::size_t n = scores.size();
  const auto positives = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
  const std::size_t negatives = n - positives;
  if (positives == 0 || negatives == 0) throw DomainError("roc_curve: both classes must be present");
  std::vector<std::size_t> order = iota_indices(n);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  std::vector<RocPoint> out;
  out.push_back({std::numeric_limits<double>::infinity(), 0.0, 0.0});
  std::size_t tp = 0;
  std::size_t fp = 0;
  for (std::size_t i = 0; i < n;) {
    const double s = scores[order[i]];
    while (i < n && scores[order[i]] == s) {
      labels[order[i]] == 1 ? ++tp : ++fp;
      ++i;
    }
    out.push_back({s, static_cast<double>(fp) / static_cast<double>(negatives),
                   static_cast<double>(tp) / static_cast<double>(positives)});
  }
  return out;
}

EvalReport evaluate(std::span<const double> probs, std::span<const int> labels, double threshold,
                    std::size_t n_bins) {
  EvalReport r;
  r.confusion = confusion(probs, labels, threshold);
  r.threshold = threshold_metrics(r.confusion);
  r.auc = roc_auc(probs, labels);
  r.brier = brier(probs, labels);
  r.reliability = reliability_curve(probs, labels, n_bins);
  r.ece = ece_from_points(r.reliability);
  return r;
}

std::string_view to_string(Metric metric) {
  switch (metric) {
    case Metric::Accuracy: return "accuracy";
    case Metric::F1: return "f1";
    case Metric::Auc: return "auc";
    case Metric::NegBrier: return "neg_brier";
    case Metric::NegEce: return "neg_ece";
  }
  return "unknown";
}

Metric parse_metric(std::string_view name) {
  if (name == "accuracy") return Metric::Accuracy;
  if (name == "f1") return Metric::F1;
  if (name == "auc") return Metric::Auc;
  if (name == "brier" || name == "neg_brier") return Metric::NegBrier;
  if (name == "ece" || name == "neg_ece") return Metric::NegEce;
  throw ConfigError("unknown metric '" + std::string(name) + "'");
}

double score_metric(Metric metric, std::span<const double> probs, std::span<const int> labels, double threshold,
                    std::size_t n_bins) {
  switch (metric) {
    case Metric::Accuracy: return threshold_metrics(confusion(probs, labels, threshold)).accuracy;
    case Metric::F1: return threshold_metrics(confusion(probs, labels, threshold)).f1;
    case Metric::Auc: return roc_auc(probs, labels);
    case Metric::NegBrier: return -brier(probs, labels);
    case Metric::NegEce: return -ece(probs, labels, n_bins);
  }
  throw ConfigError("unknown metric");
}

}  // namespace cvd::metrics
