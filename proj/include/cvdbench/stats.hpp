#pragma once

#include <span>
#include <string>
#include <vector>

#include "cvdbench/common.hpp"
#include "cvdbench/preprocess.hpp"
#include "cvdbench/special_functions.hpp"

namespace cvd::stats {

struct TestResult {
  double statistic = 0.0;
  double df = 0.0;
  double df2 = 0.0;  // second degrees of freedom (F tests only), else 0
  double p_value = 1.0;
};

/// Unequal-variance two-sample t test, two-sided.
/// Throws DomainError when a group has fewer than 2 values or zero variance.
TestResult welch_t_test(std::span<const double> a, std::span<const double> b);

/// Pearson chi-square test of independence on an r x c table of counts.
/// Throws DomainError for a zero expected count or a table smaller than 2x2.
TestResult chi_square_independence(const std::vector<std::vector<double>>& table);

/// One-way ANOVA; df = k-1, df2 = n-k.
TestResult one_way_anova(const std::vector<std::vector<double>>& groups);

/// Pearson correlations. A constant column is marked undefined and its row and
/// column hold NaN (including the diagonal).
struct CorrelationMatrix {
  std::vector<std::string> labels;
  Matrix values;
  std::vector<bool> defined;
};

CorrelationMatrix pearson_matrix(const std::vector<std::vector<double>>& columns,
                                 std::vector<std::string> labels);

struct OddsRatioEstimate {
  std::string feature;
  double beta = 0.0;  // log-odds per unit of the feature
  double odds_ratio = 1.0;
  double intercept = 0.0;
  bool separated = false;  // perfect or quasi-perfect separation detected
  bool converged = true;
  std::string diagnostic;
};

/// Logistic regression of `target` on the given columns (intercept added).
/// Columns are standardised for fitting and coefficients mapped back to raw
/// units, so odds ratios are per unit of each input. Throws DomainError if the
/// target lacks a class or a column is constant.
std::vector<OddsRatioEstimate> odds_ratios(const std::vector<std::vector<double>>& columns,
                                           const std::vector<std::string>& names,
                                           std::span<const int> target);

OddsRatioEstimate univariate_odds_ratio(std::span<const double> values, std::span<const int> target,
                                        std::string feature = "x");

double mean(std::span<const double> values);
/// Sample variance (n - 1 denominator).
double variance(std::span<const double> values);
double median(std::span<const double> values);

struct BatteryRow {
  std::string test;      // welch_t, chi_square, anova
  std::string variable;  // e.g. "weight" or "ap_hi~cholesterol"
  TestResult result;
};

struct GroupSummary {
  std::string variable;
  std::string group;
  std::size_t n = 0;
  double mean = 0.0;
  double median = 0.0;
};

struct StatsReport {
  std::vector<BatteryRow> tests;
  std::vector<OddsRatioEstimate> univariate;    // one per non-constant column
  std::vector<OddsRatioEstimate> blood_pressure;  // joint ap_hi + ap_lo fit
  std::vector<GroupSummary> groups;
  CorrelationMatrix correlation;  // all columns plus cardio
};

/// Default battery: continuous columns get a Welch test by cardio, binary and
/// categorical columns a chi-square test against cardio, and ap_hi an ANOVA
/// across cholesterol levels. Rows with a missing value in the tested column
/// are skipped for that test.
StatsReport run_battery(const preprocess::ClinicalTable& table);

}  // namespace cvd::stats
