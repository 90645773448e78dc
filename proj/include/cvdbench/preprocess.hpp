#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cvdbench/common.hpp"
#include "cvdbench/ingest.hpp"

namespace cvd::preprocess {

/// Age in years: days / 365.25. Throws DomainError for negative input.
double age_days_to_years(std::int64_t days);

/// weight_kg / (height_cm / 100)^2. Throws DomainError unless both are positive.
double compute_bmi(double weight_kg, double height_cm);

struct Range {
  double min = 0.0;
  double max = 0.0;
  bool contains(double x) const { return x >= min && x <= max; }
};

/// Plausibility filter. Bounds are inclusive.
struct CleaningRules {
  Range ap_hi{40.0, 250.0};
  Range ap_lo{30.0, 200.0};
  Range height_cm{100.0, 220.0};
  Range weight_kg{30.0, 250.0};
  bool require_ap_hi_gt_ap_lo = true;
  bool drop_invalid_codes = true;

  void validate() const;
};

struct CleaningResult {
  ingest::RawDataset retained;
  /// Rule name → rows dropped. A row failing several rules is charged to the
  /// first rule in this order.
  std::vector<std::pair<std::string, std::size_t>> dropped_by_rule;

  std::size_t total_dropped() const;
};

/// Drops rows violating any enabled rule; retained order is preserved. Missing
/// cells never trigger a range rule.
CleaningResult apply_cleaning(const ingest::RawDataset& dataset, const CleaningRules& rules);

enum class ColumnRole { Continuous, Binary, Categorical };

/// Column-oriented numeric view of cleaned records, NaN marking holes.
/// Columns: age_years, gender (0 female / 1 male), height, weight, ap_hi, ap_lo,
/// [bmi], smoke, alco, active, cholesterol, gluc.
struct ClinicalTable {
  std::vector<std::string> names;
  std::vector<ColumnRole> roles;
  std::vector<std::vector<double>> columns;
  std::vector<int> target;
  std::vector<std::int64_t> ids;

  std::size_t rows() const { return target.size(); }
  std::size_t index_of(std::string_view name) const;
  const std::vector<double>& column(std::string_view name) const { return columns[index_of(name)]; }
};

ClinicalTable to_clinical_table(const ingest::RawDataset& dataset, bool include_bmi = true);

/// Quantile with linear interpolation between order statistics
/// (h = (n-1)p). `sorted` must be ascending and non-empty.
double quantile_linear(std::span<const double> sorted, double p);

/// Indices of values outside [Q1 - 1.5 IQR, Q3 + 1.5 IQR]. NaN entries are
/// ignored. Throws DomainError with fewer than 4 finite values.
std::vector<std::size_t> census_outliers_iqr(std::span<const double> values);

struct OutlierCensus {
  std::vector<std::string> columns;
  std::vector<std::vector<std::size_t>> flagged;  // row indices per column

  std::size_t count(std::size_t column) const { return flagged[column].size(); }
};

/// IQR census over the continuous columns of a table. Never mutates data.
OutlierCensus census_outliers(const ClinicalTable& table);

/// Per-column fill values: median for continuous columns, mode (smallest code
/// on ties) for binary and categorical columns, both from training rows only.
struct Imputer {
  std::vector<std::string> columns;
  std::vector<double> fill;

  static Imputer fit(const ClinicalTable& table, std::span<const std::size_t> train);
  ClinicalTable apply(ClinicalTable table) const;

  bool operator==(const Imputer&) const = default;
};

/// fit + apply in one step.
ClinicalTable impute(const ClinicalTable& table, std::span<const std::size_t> train);

struct ScalerEntry {
  std::string column;
  double mean = 0.0;
  double sd = 1.0;

  bool operator==(const ScalerEntry&) const = default;
};

struct OneHotGroup {
  std::string source;
  std::vector<int> levels;
  std::vector<std::size_t> columns;  // frame column of each level

  bool operator==(const OneHotGroup&) const = default;
};

/// Model-ready matrix. Column order: age_years, gender, height, weight, ap_hi,
/// ap_lo, [bmi], smoke, alco, active, cholesterol_1..3, gluc_1..3.
/// Continuous columns are z-scored; one-hot and binary columns are 0/1.
struct FeatureFrame {
  Matrix matrix;
  std::vector<std::string> column_names;
  std::vector<int> target;
  std::vector<ScalerEntry> scaler;
  std::vector<OneHotGroup> categorical_map;

  std::size_t rows() const { return matrix.rows(); }
  std::size_t cols() const { return matrix.cols(); }
  FeatureFrame subset(std::span<const std::size_t> indices) const;
};

/// Encoder fitted on training rows; applies the same transform to any table.
class FeatureEncoder {
 public:
  /// Throws DomainError naming a continuous column whose training sd is zero.
  static FeatureEncoder fit(const ClinicalTable& table, std::span<const std::size_t> train);

  FeatureFrame transform(const ClinicalTable& table) const;

  /// Always throws: the frame has already been through the transform.
  [[noreturn]] FeatureFrame transform(const FeatureFrame& frame) const;

  const std::vector<ScalerEntry>& scaler() const { return scaler_; }
  const std::vector<OneHotGroup>& categorical_map() const { return groups_; }
  const std::vector<std::string>& column_names() const { return column_names_; }

  bool operator==(const FeatureEncoder&) const = default;

 private:
  std::vector<std::string> input_names_;
  std::vector<ScalerEntry> scaler_;
  std::vector<OneHotGroup> groups_;
  std::vector<std::string> column_names_;
};

FeatureFrame encode_and_standardize(const ClinicalTable& table, std::span<const std::size_t> train);

struct SplitPair {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
  std::uint64_t seed = 0;
};

/// Per-class seeded shuffle; round(ratio * class size) rows of each class go to
/// train (at least one row of each class lands on each side). Index lists are
/// returned ascending. Throws DomainError when a class has fewer than 2 rows.
SplitPair stratified_split(std::span<const int> labels, double ratio, std::uint64_t seed);

double positive_rate(std::span<const int> labels, std::span<const std::size_t> indices);

}  // namespace cvd::preprocess
