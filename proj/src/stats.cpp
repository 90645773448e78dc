#include "cvdbench/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "cvdbench/logistic.hpp"

namespace cvd::stats {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

}  // namespace

double mean(std::span<const double> values) {
  if (values.empty()) throw DomainError("mean of an empty sample");
  double s = 0.0;
  for (double v : values) s += v;
  return s / static_cast<double>(values.size());
}

double variance(std::span<const double> values) {
  if (values.size() < 2) throw DomainError("variance needs at least 2 values");
  const double m = mean(values);
  double ss = 0.0;
  for (double v : values) ss += (v - m) * (v - m);
  return ss / static_cast<double>(values.size() - 1);
}

double median(std::span<const double> values) {
  if (values.empty()) throw DomainError("median of an empty sample");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  return preprocess::quantile_linear(sorted, 0.5);
}

TestResult welch_t_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) throw DomainError("welch_t_test: each group needs at least 2 values");
  const double va = variance(a);
  const double vb = variance(b);
  if (!(va > 0.0) || !(vb > 0.0)) throw DomainError("welch_t_test: a group has zero variance");
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const double sa = va / na;
  const double sb = vb / nb;
  TestResult r;
  r.statistic = (mean(a) - mean(b)) / std::sqrt(sa + sb);
  r.df = (sa + sb) * (sa + sb) / (sa * sa / (na - 1.0) + sb * sb / (nb - 1.0));
  r.p_value = student_t_two_sided(r.statistic, r.df);
  return r;
}

TestResult chi_square_independence(const std::vector<std::vector<double>>& table) {
  const std::size_t rows = table.size();
  if (rows < 2) throw DomainError("chi_square_independence: need at least 2 rows");
  const std::size_t cols = table[0].size();
  if (cols < 2) throw DomainError("chi_square_independence: need at least 2 columns");
  std::vector<double> row_sum(rows, 0.0);
  std::vector<double> col_sum(cols, 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < rows; ++i) {
    if (table[i].size() != cols) throw DomainError("chi_square_independence: ragged table");
    for (std::size_t j = 0; j < cols; ++j) {
      const double v = table[i][j];
      if (!(v >= 0.0) || !std::isfinite(v)) throw DomainError("chi_square_independence: counts must be non-negative");
      row_sum[i] += v;
      col_sum[j] += v;
      total += v;
    }
  }
  double chi2 = 0.0;
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      const double expected = row_sum[i] * col_sum[j] / (total > 0.0 ? total : 1.0);
      if (!(expected > 0.0)) {
        throw DomainError("chi_square_independence: zero expected count in cell (" + std::to_string(i) + ", " +
                          std::to_string(j) + ")");
      }
      const double diff = table[i][j] - expected;
      chi2 += diff * diff / expected;
    }
  }
  TestResult r;
  r.statistic = chi2;
  r.df = static_cast<double>((rows - 1) * (cols - 1));
  r.p_value = chi_square_sf(chi2, r.df);
  return r;
}

TestResult one_way_anova(const std::vector<std::vector<double>>& groups) {
  if (groups.size() < 2) throw DomainError("one_way_anova: need at least 2 groups");
  double grand = 0.0;
  std::size_t n = 0;
  for (const auto& g : groups) {
    if (g.size() < 2) throw DomainError("one_way_anova: each group needs at least 2 values");
    for (double v : g) grand += v;
    n += g.size();
  }
  grand /= static_cast<double>(n);
  double ssb = 0.0;
  double ssw = 0.0;
  for (const auto& g : groups) {
    const double m = mean(g);
    ssb += static_cast<double>(g.size()) * (m - grand) * (m - grand);
    for (double v : g) ssw += (v - m) * (v - m);
  }
  if (!(ssw > 0.0)) throw DomainError("one_way_anova: zero within-group variance");
  const double k = static_cast<double>(groups.size());
  TestResult r;
  r.df = k - 1.0;
  r.df2 = static_cast<double>(n) - k;
  r.statistic = (ssb / r.df) / (ssw / r.df2);
  r.p_value = f_sf(r.statistic, r.df, r.df2);
  return r;
}

CorrelationMatrix pearson_matrix(const std::vector<std::vector<double>>& columns,
                                 std::vector<std::string> labels) {
  const std::size_t d = columns.size();
  if (labels.size() != d) throw SchemaError("pearson_matrix: label count differs from column count");
  const std::size_t n = d ? columns[0].size() : 0;
  if (d && n < 2) throw DomainError("pearson_matrix: need at least 2 rows");
  std::vector<std::vector<double>> centered(d);
  std::vector<double> norm(d, 0.0);
  CorrelationMatrix out{std::move(labels), Matrix(d, d, kNaN), std::vector<bool>(d, false)};
  for (std::size_t c = 0; c < d; ++c) {
    if (columns[c].size() != n) throw SchemaError("pearson_matrix: columns differ in length");
    const double m = mean(columns[c]);
    centered[c].resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      centered[c][i] = columns[c][i] - m;
      norm[c] += centered[c][i] * centered[c][i];
    }
    norm[c] = std::sqrt(norm[c]);
    out.defined[c] = norm[c] > 0.0 && std::isfinite(norm[c]);
  }
  for (std::size_t a = 0; a < d; ++a) {
    if (!out.defined[a]) continue;
    out.values(a, a) = 1.0;
    for (std::size_t b = a + 1; b < d; ++b) {
      if (!out.defined[b]) continue;
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) s += centered[a][i] * centered[b][i];
      const double r = std::clamp(s / (norm[a] * norm[b]), -1.0, 1.0);
      out.values(a, b) = r;
      out.values(b, a) = r;
    }
  }
  return out;
}

std::vector<OddsRatioEstimate> odds_ratios(const std::vector<std::vector<double>>& columns,
                                           const std::vector<std::string>& names,
                                           std::span<const int> target) {
  const std::size_t d = columns.size();
  const std::size_t n = target.size();
  if (names.size() != d) throw SchemaError("odds_ratios: name count differs from column count");
  if (d == 0) throw DomainError("odds_ratios: no feature columns");
  const auto positives = std::count(target.begin(), target.end(), 1);
  if (positives == 0 || static_cast<std::size_t>(positives) == n) {
    throw DomainError("odds_ratios: target must contain both classes");
  }

  std::vector<double> means(d);
  std::vector<double> sds(d);
  Matrix x(n, d);
  for (std::size_t c = 0; c < d; ++c) {
    if (columns[c].size() != n) throw SchemaError("odds_ratios: column length differs from target");
    means[c] = mean(columns[c]);
    double ss = 0.0;
    for (double v : columns[c]) ss += (v - means[c]) * (v - means[c]);
    sds[c] = std::sqrt(ss / static_cast<double>(n));
    if (!(sds[c] > 0.0)) throw DomainError("odds_ratios: column '" + names[c] + "' is constant");
    for (std::size_t i = 0; i < n; ++i) x(i, c) = (columns[c][i] - means[c]) / sds[c];
  }

  learners::LogisticOptions options;
  options.step = 1.0;  // standardised inputs keep the loss curvature below 1
  const auto fit = learners::fit_logistic_regression(x, target, options);

  // separation: some linear score orders every positive above every negative
  double min_pos = std::numeric_limits<double>::infinity();
  double max_neg = -std::numeric_limits<double>::infinity();
  double max_pos = -min_pos;
  double min_neg = min_pos;
  for (std::size_t i = 0; i < n; ++i) {
    double eta = fit.params[0];
    for (std::size_t c = 0; c < d; ++c) eta += fit.params[c + 1] * x(i, c);
    if (target[i] == 1) {
      min_pos = std::min(min_pos, eta);
      max_pos = std::max(max_pos, eta);
    } else {
      max_neg = std::max(max_neg, eta);
      min_neg = std::min(min_neg, eta);
    }
  }
  const bool separable = min_pos >= max_neg || max_pos <= min_neg;

  double intercept = fit.params[0];
  for (std::size_t c = 0; c < d; ++c) intercept -= fit.params[c + 1] * means[c] / sds[c];

  std::vector<OddsRatioEstimate> out(d);
  for (std::size_t c = 0; c < d; ++c) {
    auto& e = out[c];
    e.feature = names[c];
    e.beta = fit.params[c + 1] / sds[c];
    e.odds_ratio = std::exp(e.beta);
    e.intercept = intercept;
    e.converged = fit.converged;
    const bool huge = std::fabs(fit.params[c + 1]) > 15.0;
    e.separated = separable || huge;
    if (e.separated) {
      e.diagnostic = separable ? "classes are linearly separable; the maximum-likelihood slope is infinite"
                               : "standardised slope exceeds 15; near-separation";
    } else if (!fit.converged) {
      e.diagnostic = "optimizer hit the iteration cap";
    }
  }
  return out;
}

OddsRatioEstimate univariate_odds_ratio(std::span<const double> values, std::span<const int> target,
                                        std::string feature) {
  std::vector<std::vector<double>> columns{std::vector<double>(values.begin(), values.end())};
  return odds_ratios(columns, {std::move(feature)}, target).front();
}

StatsReport run_battery(const preprocess::ClinicalTable& table) {
  using preprocess::ColumnRole;
  StatsReport report;
  const std::size_t n = table.rows();

  for (std::size_t c = 0; c < table.names.size(); ++c) {
    const auto& name = table.names[c];
    const auto& col = table.columns[c];
    if (table.roles[c] == ColumnRole::Continuous) {
      std::vector<double> pos;
      std::vector<double> neg;
      for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(col[i])) continue;
        (table.target[i] == 1 ? pos : neg).push_back(col[i]);
      }
      report.tests.push_back({"welch_t", name, welch_t_test(pos, neg)});
      if (!pos.empty() && !neg.empty()) {
        report.groups.push_back({name, "cardio=0", neg.size(), mean(neg), median(neg)});
        report.groups.push_back({name, "cardio=1", pos.size(), mean(pos), median(pos)});
      }
    } else {
      std::map<double, std::size_t> level_row;
      std::vector<std::vector<double>> counts;
      for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(col[i])) continue;
        level_row.try_emplace(col[i], 0);
      }
      std::size_t r = 0;
      for (auto& [level, row] : level_row) row = r++;
      counts.assign(level_row.size(), std::vector<double>(2, 0.0));
      for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(col[i])) continue;
        counts[level_row[col[i]]][static_cast<std::size_t>(table.target[i])] += 1.0;
      }
      report.tests.push_back({"chi_square", name, chi_square_independence(counts)});
    }
  }

  // ap_hi across cholesterol levels
  {
    const auto& ap_hi = table.column("ap_hi");
    const auto& chol = table.column("cholesterol");
    std::map<double, std::vector<double>> by_level;
    for (std::size_t i = 0; i < n; ++i) {
      if (std::isfinite(ap_hi[i]) && std::isfinite(chol[i])) by_level[chol[i]].push_back(ap_hi[i]);
    }
    std::vector<std::vector<double>> groups;
    for (auto& [level, values] : by_level) {
      report.groups.push_back({"ap_hi", "cholesterol=" + format_exact(level), values.size(), mean(values),
                               median(values)});
      groups.push_back(std::move(values));
    }
    report.tests.push_back({"anova", "ap_hi~cholesterol", one_way_anova(groups)});
  }

  // odds ratios and correlations on complete rows
  std::vector<std::size_t> complete;
  for (std::size_t i = 0; i < n; ++i) {
    bool ok = true;
    for (const auto& col : table.columns) ok = ok && std::isfinite(col[i]);
    if (ok) complete.push_back(i);
  }
  std::vector<int> target;
  target.reserve(complete.size());
  for (auto i : complete) target.push_back(table.target[i]);
  std::vector<std::vector<double>> columns(table.columns.size());
  for (std::size_t c = 0; c < table.columns.size(); ++c) {
    columns[c].reserve(complete.size());
    for (auto i : complete) columns[c].push_back(table.columns[c][i]);
  }
  for (std::size_t c = 0; c < columns.size(); ++c) {
    try {
      report.univariate.push_back(univariate_odds_ratio(columns[c], target, table.names[c]));
    } catch (const DomainError& e) {
      OddsRatioEstimate skipped;
      skipped.feature = table.names[c];
      skipped.odds_ratio = std::numeric_limits<double>::quiet_NaN();
      skipped.beta = skipped.odds_ratio;
      skipped.intercept = skipped.odds_ratio;
      skipped.diagnostic = e.what();
      report.univariate.push_back(skipped);
    }
  }
  report.blood_pressure = odds_ratios({columns[table.index_of("ap_hi")], columns[table.index_of("ap_lo")]},
                                      {"ap_hi", "ap_lo"}, target);

  auto labels = table.names;
  labels.push_back("cardio");
  std::vector<double> cardio(target.begin(), target.end());
  columns.push_back(std::move(cardio));
  report.correlation = pearson_matrix(columns, std::move(labels));
  return report;
}

}  // namespace cvd::stats
