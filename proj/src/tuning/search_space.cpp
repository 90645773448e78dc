#include "cvdbench/search_space.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>

#include "cvdbench/common.hpp"

namespace cvd::tuning {

Axis Axis::continuous(std::string name, double min, double max, bool log_scale, std::vector<double> grid) {
  return {std::move(name), AxisKind::Continuous, min, max, log_scale, std::move(grid)};
}

Axis Axis::integer(std::string name, double min, double max, bool log_scale, std::vector<double> grid) {
  return {std::move(name), AxisKind::Integer, min, max, log_scale, std::move(grid)};
}

Axis Axis::categorical(std::string name, std::vector<double> choices) {
  Axis a{std::move(name), AxisKind::Categorical, 0.0, 0.0, false, std::move(choices)};
  if (!a.grid.empty()) {
    a.min = *std::min_element(a.grid.begin(), a.grid.end());
    a.max = *std::max_element(a.grid.begin(), a.grid.end());
  }
  return a;
}

std::vector<double> Axis::grid_values() const {
  if (!grid.empty()) return grid;
  if (kind == AxisKind::Integer) {
    std::vector<double> out;
    for (double v = std::ceil(min); v <= max; v += 1.0) out.push_back(v);
    return out;
  }
  throw ConfigError("axis '" + name + "' is continuous and has no explicit grid");
}

double Axis::search_min() const { return to_search(min); }
double Axis::search_max() const { return to_search(max); }

double Axis::to_search(double value) const { return log_scale ? std::log(value) : value; }

double Axis::from_search(double s) const {
  double v = log_scale ? std::exp(s) : s;
  if (kind == AxisKind::Integer) v = std::round(v);
  return std::clamp(v, min, max);
}

std::string format_config(const Config& config) {
  std::string out;
  for (std::size_t i = 0; i < config.size(); ++i) {
    if (i) out += ';';
    out += config[i].first + "=" + format_exact(config[i].second);
  }
  return out;
}

void SearchSpace::validate() const {
  std::vector<std::string> problems;
  if (axes.empty()) problems.push_back("search space has no axes");
  for (std::size_t i = 0; i < axes.size(); ++i) {
    const auto& a = axes[i];
    const std::string tag = "axis '" + a.name + "'";
    for (std::size_t j = 0; j < i; ++j) {
      if (axes[j].name == a.name) problems.push_back(tag + " is declared twice");
    }
    if (a.kind == AxisKind::Categorical) {
      if (a.grid.empty()) problems.push_back(tag + " has no choices");
      continue;
    }
    if (!std::isfinite(a.min) || !std::isfinite(a.max)) {
      problems.push_back(tag + " has non-finite bounds");
    } else if (!(a.min < a.max)) {
      problems.push_back(tag + " needs min < max");
    } else if (a.log_scale && !(a.min > 0.0)) {
      problems.push_back(tag + " is log-scaled but min <= 0");
    }
    if (a.kind == AxisKind::Integer && std::ceil(a.min) > a.max) problems.push_back(tag + " holds no integer");
    for (double v : a.grid) {
      if (!(v >= a.min && v <= a.max)) problems.push_back(tag + " grid value " + format_exact(v) + " out of bounds");
    }
  }
  if (problems.empty()) return;
  std::string message = "invalid search space: ";
  for (std::size_t i = 0; i < problems.size(); ++i) {
    if (i) message += "; ";
    message += problems[i];
  }
  throw ConfigError(message);
}

bool SearchSpace::has_categorical() const {
  return std::any_of(axes.begin(), axes.end(), [](const Axis& a) { return a.kind == AxisKind::Categorical; });
}

std::size_t SearchSpace::grid_size() const {
  std::size_t total = 1;
  for (const auto& a : axes) {
    const std::size_t k = a.grid_values().size();
    if (k == 0) return 0;
    if (total > std::numeric_limits<std::size_t>::max() / k) return std::numeric_limits<std::size_t>::max();
    total *= k;
  }
  return total;
}

Config SearchSpace::sample(std::mt19937_64& rng) const {
  Config out;
  out.reserve(axes.size());
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (const auto& a : axes) {
    double v = 0.0;
    if (a.kind == AxisKind::Categorical) {
      std::uniform_int_distribution<std::size_t> pick(0, a.grid.size() - 1);
      v = a.grid[pick(rng)];
    } else if (a.kind == AxisKind::Integer && !a.log_scale) {
      std::uniform_int_distribution<std::int64_t> pick(static_cast<std::int64_t>(std::ceil(a.min)),
                                                       static_cast<std::int64_t>(std::floor(a.max)));
      v = static_cast<double>(pick(rng));
    } else {
      const double lo = a.search_min();
      const double hi = a.search_max();
      v = a.from_search(lo + (hi - lo) * unit(rng));
    }
    out.emplace_back(a.name, v);
  }
  return out;
}

Config SearchSpace::from_search(std::span<const double> s) const {
  if (s.size() != axes.size()) throw ConfigError("search point has the wrong dimension");
  Config out;
  for (std::size_t i = 0; i < axes.size(); ++i) {
    if (axes[i].kind == AxisKind::Categorical) {
      throw ConfigError("axis '" + axes[i].name + "' is categorical; continuous search needs numeric axes");
    }
    out.emplace_back(axes[i].name, axes[i].from_search(s[i]));
  }
  return out;
}

Config SearchSpace::from_unit(std::span<const double> u) const {
  std::vector<double> s(u.size());
  for (std::size_t i = 0; i < u.size() && i < axes.size(); ++i) {
    const double lo = axes[i].search_min();
    const double hi = axes[i].search_max();
    s[i] = lo + (hi - lo) * std::clamp(u[i], 0.0, 1.0);
  }
  return from_search(s);
}

}  // namespace cvd::tuning
