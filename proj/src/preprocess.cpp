#include "cvdbench/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>

namespace cvd::preprocess {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

template <typename T>
double or_nan(const std::optional<T>& v) {
  return v ? static_cast<double>(*v) : kNaN;
}

bool valid_code(const std::optional<int>& v, std::initializer_list<int> allowed) {
  return !v || std::find(allowed.begin(), allowed.end(), *v) != allowed.end();
}

bool outside(const std::optional<double>& v, const Range& r) { return v && !r.contains(*v); }

}  // namespace

double age_days_to_years(std::int64_t days) {
  if (days < 0) throw DomainError("age_days_to_years: negative age " + std::to_string(days));
  return static_cast<double>(days) / 365.25;
}

double compute_bmi(double weight_kg, double height_cm) {
  if (!(weight_kg > 0.0) || !(height_cm > 0.0)) {
    throw DomainError("compute_bmi: weight and height must be positive");
  }
  const double m = height_cm / 100.0;
  return weight_kg / (m * m);
}

void CleaningRules::validate() const {
  std::vector<std::string> bad;
  auto check = [&](const Range& r, const char* name) {
    if (!(r.min < r.max)) bad.push_back(std::string(name) + " range requires min < max");
  };
  check(ap_hi, "ap_hi");
  check(ap_lo, "ap_lo");
  check(height_cm, "height");
  check(weight_kg, "weight");
  if (!bad.empty()) {
    std::string msg = "invalid cleaning rules:";
    for (const auto& b : bad) msg += " " + b + ";";
    throw ConfigError(msg);
  }
}

std::size_t CleaningResult::total_dropped() const {
  std::size_t total = 0;
  for (const auto& [rule, n] : dropped_by_rule) total += n;
  return total;
}

CleaningResult apply_cleaning(const ingest::RawDataset& dataset, const CleaningRules& rules) {
  rules.validate();
  CleaningResult result;
  result.retained.source_path = dataset.source_path;
  result.retained.delimiter = dataset.delimiter;
  result.retained.rejected = dataset.rejected;
  result.dropped_by_rule = {{"invalid_code", 0},     {"ap_hi_range", 0},  {"ap_lo_range", 0},
                            {"height_range", 0},     {"weight_range", 0}, {"ap_hi_gt_ap_lo", 0}};

  for (const auto& r : dataset.records) {
    std::optional<std::size_t> rule;
    if (rules.drop_invalid_codes &&
        (!valid_code(r.gender, {1, 2}) || !valid_code(r.cholesterol, {1, 2, 3}) ||
         !valid_code(r.gluc, {1, 2, 3}) || !valid_code(r.smoke, {0, 1}) ||
         !valid_code(r.alco, {0, 1}) || !valid_code(r.active, {0, 1}) ||
         (r.age_days && *r.age_days <= 0))) {
      rule = 0;
    } else if (outside(r.ap_hi, rules.ap_hi)) {
      rule = 1;
    } else if (outside(r.ap_lo, rules.ap_lo)) {
      rule = 2;
    } else if (outside(r.height_cm, rules.height_cm)) {
      rule = 3;
    } else if (outside(r.weight_kg, rules.weight_kg)) {
      rule = 4;
    } else if (rules.require_ap_hi_gt_ap_lo && r.ap_hi && r.ap_lo && !(*r.ap_hi > *r.ap_lo)) {
      rule = 5;
    }
    if (rule) {
      ++result.dropped_by_rule[*rule].second;
    } else {
      result.retained.records.push_back(r);
    }
  }
  return result;
}

std::size_t ClinicalTable::index_of(std::string_view name) const {
  const auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) throw SchemaError("no column named '" + std::string(name) + "'");
  return static_cast<std::size_t>(it - names.begin());
}

ClinicalTable to_clinical_table(const ingest::RawDataset& dataset, bool include_bmi) {
  ClinicalTable t;
  auto add = [&](std::string name, ColumnRole role) {
    t.names.push_back(std::move(name));
    t.roles.push_back(role);
    t.columns.emplace_back();
    t.columns.back().reserve(dataset.records.size());
    return t.columns.size() - 1;
  };
  const auto age = add("age_years", ColumnRole::Continuous);
  const auto gender = add("gender", ColumnRole::Binary);
  const auto height = add("height", ColumnRole::Continuous);
  const auto weight = add("weight", ColumnRole::Continuous);
  const auto ap_hi = add("ap_hi", ColumnRole::Continuous);
  const auto ap_lo = add("ap_lo", ColumnRole::Continuous);
  const auto bmi = include_bmi ? add("bmi", ColumnRole::Continuous) : std::size_t{0};
  const auto smoke = add("smoke", ColumnRole::Binary);
  const auto alco = add("alco", ColumnRole::Binary);
  const auto active = add("active", ColumnRole::Binary);
  const auto chol = add("cholesterol", ColumnRole::Categorical);
  const auto gluc = add("gluc", ColumnRole::Categorical);

  for (const auto& r : dataset.records) {
    t.columns[age].push_back(r.age_days && *r.age_days >= 0 ? age_days_to_years(*r.age_days) : kNaN);
    t.columns[gender].push_back(r.gender ? (*r.gender == 2 ? 1.0 : 0.0) : kNaN);
    t.columns[height].push_back(or_nan(r.height_cm));
    t.columns[weight].push_back(or_nan(r.weight_kg));
    t.columns[ap_hi].push_back(or_nan(r.ap_hi));
    t.columns[ap_lo].push_back(or_nan(r.ap_lo));
    if (include_bmi) {
      const bool ok = r.weight_kg && r.height_cm && *r.weight_kg > 0 && *r.height_cm > 0;
      t.columns[bmi].push_back(ok ? compute_bmi(*r.weight_kg, *r.height_cm) : kNaN);
    }
    t.columns[smoke].push_back(or_nan(r.smoke));
    t.columns[alco].push_back(or_nan(r.alco));
    t.columns[active].push_back(or_nan(r.active));
    t.columns[chol].push_back(or_nan(r.cholesterol));
    t.columns[gluc].push_back(or_nan(r.gluc));
    t.target.push_back(r.cardio);
    t.ids.push_back(r.id);
  }
  return t;
}

double quantile_linear(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw DomainError("quantile_linear: empty input");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

std::vector<std::size_t> census_outliers_iqr(std::span<const double> values) {
  std::vector<double> finite;
  finite.reserve(values.size());
  for (double v : values) {
    if (!std::isnan(v)) finite.push_back(v);
  }
  if (finite.size() < 4) {
    throw DomainError("census_outliers_iqr: need at least 4 values, got " +
                      std::to_string(finite.size()));
  }
  std::sort(finite.begin(), finite.end());
  const double q1 = quantile_linear(finite, 0.25);
  const double q3 = quantile_linear(finite, 0.75);
  const double iqr = q3 - q1;
  const double lo = q1 - 1.5 * iqr;
  const double hi = q3 + 1.5 * iqr;
  std::vector<std::size_t> flagged;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isnan(values[i]) && (values[i] < lo || values[i] > hi)) flagged.push_back(i);
  }
  return flagged;
}

OutlierCensus census_outliers(const ClinicalTable& table) {
  OutlierCensus census;
  for (std::size_t c = 0; c < table.columns.size(); ++c) {
    if (table.roles[c] != ColumnRole::Continuous) continue;
    census.columns.push_back(table.names[c]);
    census.flagged.push_back(census_outliers_iqr(table.columns[c]));
  }
  return census;
}

Imputer Imputer::fit(const ClinicalTable& table, std::span<const std::size_t> train) {
  Imputer imp;
  imp.columns = table.names;
  for (std::size_t c = 0; c < table.columns.size(); ++c) {
    std::vector<double> seen;
    seen.reserve(train.size());
    for (auto i : train) {
      if (!std::isnan(table.columns[c][i])) seen.push_back(table.columns[c][i]);
    }
    if (seen.empty()) {
      throw DomainError("impute: column '" + table.names[c] + "' is entirely missing on training rows");
    }
    std::sort(seen.begin(), seen.end());
    if (table.roles[c] == ColumnRole::Continuous) {
      imp.fill.push_back(quantile_linear(seen, 0.5));
    } else {
      // sorted, so the first run of maximal length is the smallest modal code
      double best = seen.front();
      std::size_t best_run = 0;
      for (std::size_t i = 0; i < seen.size();) {
        std::size_t j = i;
        while (j < seen.size() && seen[j] == seen[i]) ++j;
        if (j - i > best_run) {
          best_run = j - i;
          best = seen[i];
        }
        i = j;
      }
      imp.fill.push_back(best);
    }
  }
  return imp;
}

ClinicalTable Imputer::apply(ClinicalTable table) const {
  if (table.names != columns) throw SchemaError("impute: table layout differs from the fitted imputer");
  for (std::size_t c = 0; c < table.columns.size(); ++c) {
    for (double& v : table.columns[c]) {
      if (std::isnan(v)) v = fill[c];
    }
  }
  return table;
}

ClinicalTable impute(const ClinicalTable& table, std::span<const std::size_t> train) {
  return Imputer::fit(table, train).apply(table);
}

FeatureFrame FeatureFrame::subset(std::span<const std::size_t> indices) const {
  FeatureFrame out;
  out.matrix = matrix.select_rows(indices);
  out.column_names = column_names;
  out.scaler = scaler;
  out.categorical_map = categorical_map;
  out.target.reserve(indices.size());
  for (auto i : indices) out.target.push_back(target[i]);
  return out;
}

FeatureEncoder FeatureEncoder::fit(const ClinicalTable& table, std::span<const std::size_t> train) {
  if (train.empty()) throw DomainError("encode_and_standardize: no training rows");
  FeatureEncoder enc;
  enc.input_names_ = table.names;

  for (std::size_t c = 0; c < table.columns.size(); ++c) {
    const auto& col = table.columns[c];
    switch (table.roles[c]) {
      case ColumnRole::Continuous: {
        double sum = 0.0;
        for (auto i : train) sum += col[i];
        const double mean = sum / static_cast<double>(train.size());
        double ss = 0.0;
        for (auto i : train) ss += (col[i] - mean) * (col[i] - mean);
        const double sd = std::sqrt(ss / static_cast<double>(train.size()));
        if (!(sd > 0.0) || !std::isfinite(sd)) {
          throw DomainError("encode_and_standardize: column '" + table.names[c] +
                            "' has zero standard deviation on training rows");
        }
        enc.scaler_.push_back({table.names[c], mean, sd});
        enc.column_names_.push_back(table.names[c]);
        break;
      }
      case ColumnRole::Binary:
        enc.column_names_.push_back(table.names[c]);
        break;
      case ColumnRole::Categorical:
        break;  // appended after the others
    }
  }
  for (std::size_t c = 0; c < table.columns.size(); ++c) {
    if (table.roles[c] != ColumnRole::Categorical) continue;
    OneHotGroup g;
    g.source = table.names[c];
    g.levels = {1, 2, 3};
    for (int level : g.levels) {
      g.columns.push_back(enc.column_names_.size());
      enc.column_names_.push_back(table.names[c] + "_" + std::to_string(level));
    }
    enc.groups_.push_back(std::move(g));
  }
  return enc;
}

FeatureFrame FeatureEncoder::transform(const ClinicalTable& table) const {
  if (table.names != input_names_) {
    throw SchemaError("encode_and_standardize: table layout differs from the fitted encoder");
  }
  const std::size_t n = table.rows();
  FeatureFrame frame;
  frame.matrix = Matrix(n, column_names_.size());
  frame.column_names = column_names_;
  frame.target = table.target;
  frame.scaler = scaler_;
  frame.categorical_map = groups_;

  std::size_t out_col = 0;
  std::size_t scaler_idx = 0;
  for (std::size_t c = 0; c < table.columns.size(); ++c) {
    const auto& col = table.columns[c];
    if (table.roles[c] == ColumnRole::Categorical) continue;
    for (std::size_t i = 0; i < n; ++i) {
      if (std::isnan(col[i])) {
        throw DomainError("encode_and_standardize: missing value in '" + table.names[c] +
                          "'; impute before encoding");
      }
    }
    if (table.roles[c] == ColumnRole::Continuous) {
      const auto& s = scaler_[scaler_idx++];
      for (std::size_t i = 0; i < n; ++i) frame.matrix(i, out_col) = (col[i] - s.mean) / s.sd;
    } else {
      for (std::size_t i = 0; i < n; ++i) frame.matrix(i, out_col) = col[i];
    }
    ++out_col;
  }
  for (const auto& g : groups_) {
    const auto& col = table.columns[table.index_of(g.source)];
    for (std::size_t i = 0; i < n; ++i) {
      const auto it = std::find(g.levels.begin(), g.levels.end(), static_cast<int>(col[i]));
      if (std::isnan(col[i]) || it == g.levels.end() || static_cast<double>(*it) != col[i]) {
        throw DomainError("encode_and_standardize: '" + g.source + "' value outside {1,2,3} at row " +
                          std::to_string(i));
      }
      frame.matrix(i, g.columns[static_cast<std::size_t>(it - g.levels.begin())]) = 1.0;
    }
  }
  return frame;
}

FeatureFrame FeatureEncoder::transform(const FeatureFrame&) const {
  throw SchemaError("encode_and_standardize: frame is already encoded and standardized");
}

FeatureFrame encode_and_standardize(const ClinicalTable& table, std::span<const std::size_t> train) {
  return FeatureEncoder::fit(table, train).transform(table);
}

SplitPair stratified_split(std::span<const int> labels, double ratio, std::uint64_t seed) {
  if (!(ratio > 0.0 && ratio < 1.0)) throw DomainError("stratified_split: ratio must lie in (0,1)");
  std::vector<std::size_t> by_class[2];
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 0 && labels[i] != 1) throw DomainError("stratified_split: labels must be 0/1");
    by_class[labels[i]].push_back(i);
  }
  SplitPair split;
  split.seed = seed;
  std::mt19937_64 rng(seed);
  for (int c = 0; c < 2; ++c) {
    auto& members = by_class[c];
    if (members.size() < 2) {
      throw DomainError("stratified_split: class " + std::to_string(c) + " has fewer than 2 rows");
    }
    std::shuffle(members.begin(), members.end(), rng);
    auto n_train = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(members.size())));
    n_train = std::clamp<std::size_t>(n_train, 1, members.size() - 1);
    split.train.insert(split.train.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(n_train));
    split.test.insert(split.test.end(), members.begin() + static_cast<std::ptrdiff_t>(n_train), members.end());
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

double positive_rate(std::span<const int> labels, std::span<const std::size_t> indices) {
  if (indices.empty()) return 0.0;
  std::size_t pos = 0;
  for (auto i : indices) pos += labels[i] == 1;
  return static_cast<double>(pos) / static_cast<double>(indices.size());
}

}  // namespace cvd::preprocess
