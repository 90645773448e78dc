#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace cvd::metrics {

struct ConfusionMatrix {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;
  std::size_t fn = 0;

  std::size_t total() const { return tp + fp + tn + fn; }
  bool operator==(const ConfusionMatrix&) const = default;
};

/// Counts with the convention prob >= threshold → positive.
/// Throws SchemaError on a length mismatch or empty input.
ConfusionMatrix confusion(std::span<const double> probs, std::span<const int> labels, double threshold = 0.5);

struct ThresholdMetrics {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  bool precision_undefined = false;  // tp + fp == 0, reported as 0
  bool recall_undefined = false;     // tp + fn == 0, reported as 0
};

/// Throws DomainError for an empty matrix.
ThresholdMetrics threshold_metrics(const ConfusionMatrix& cm);

/// Rank-statistic AUC with average ranks over ties. Throws DomainError
/// unless both classes are present.
double roc_auc(std::span<const double> scores, std::span<const int> labels);

double brier(std::span<const double> probs, std::span<const int> labels);

struct ReliabilityPoint {
  double bin_low = 0.0;
  double bin_high = 0.0;
  double mean_confidence = 0.0;
  double frequency = 0.0;
  std::size_t count = 0;
};

/// Bin of a probability among `n_bins` equal-width bins over [0, 1]: the first
/// bin is [0, 1/n], later bins are (lo, hi].
std::size_t bin_index(double prob, std::size_t n_bins);

/// Non-empty bins only, in ascending bin order.
std::vector<ReliabilityPoint> reliability_curve(std::span<const double> probs, std::span<const int> labels,
                                                std::size_t n_bins = 10);

/// Sum over non-empty bins of (count / n) * |mean confidence - frequency|.
double ece_from_points(std::span<const ReliabilityPoint> points);
double ece(std::span<const double> probs, std::span<const int> labels, std::size_t n_bins = 10);

struct RocPoint {
  double threshold = 0.0;
  double fpr = 0.0;
  double tpr = 0.0;
};

/// ROC vertices from (0,0) to (1,1); one point per distinct score, highest first.
std::vector<RocPoint> roc_curve(std::span<const double> scores, std::span<const int> labels);

struct EvalReport {
  ConfusionMatrix confusion;
  ThresholdMetrics threshold;
  double auc = 0.0;
  double brier = 0.0;
  double ece = 0.0;
  std::vector<ReliabilityPoint> reliability;
};

EvalReport evaluate(std::span<const double> probs, std::span<const int> labels, double threshold = 0.5,
                    std::size_t n_bins = 10);

/// Model-selection metrics; loss metrics are negated so larger is better.
enum class Metric { Accuracy, F1, Auc, NegBrier, NegEce };

std::string_view to_string(Metric metric);
/// Accepts accuracy, f1, auc, brier, neg_brier, ece, neg_ece.
Metric parse_metric(std::string_view name);
double score_metric(Metric metric, std::span<const double> probs, std::span<const int> labels,
                    double threshold = 0.5, std::size_t n_bins = 10);

}  // namespace cvd::metrics
