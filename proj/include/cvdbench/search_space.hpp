#pragma once

#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace cvd::tuning {

enum class AxisKind { Continuous, Integer, Categorical };

/// One hyperparameter domain. Continuous and integer axes have bounds and an
/// optional log scale; `grid` lists explicit values for grid search (a
/// categorical axis stores its choices there).
struct Axis {
  std::string name;
  AxisKind kind = AxisKind::Continuous;
  double min = 0.0;
  double max = 1.0;
  bool log_scale = false;
  std::vector<double> grid;

  static Axis continuous(std::string name, double min, double max, bool log_scale = false,
                         std::vector<double> grid = {});
  static Axis integer(std::string name, double min, double max, bool log_scale = false,
                      std::vector<double> grid = {});
  static Axis categorical(std::string name, std::vector<double> choices);

  /// Values visited by grid search: the explicit grid, else every integer in
  /// range for integer axes. Throws ConfigError for a continuous axis without
  /// a grid.
  std::vector<double> grid_values() const;

  /// Search coordinates: log(value) on log axes, value otherwise.
  double search_min() const;
  double search_max() const;
  double to_search(double value) const;
  /// Maps back and, for integer axes, rounds and clamps into [min, max].
  double from_search(double s) const;
};

/// Ordered (name, value) pairs, one per axis.
using Config = std::vector<std::pair<std::string, double>>;

/// "a=1;b=0.5" with shortest exact numbers.
std::string format_config(const Config& config);

struct SearchSpace {
  std::vector<Axis> axes;

  /// Throws ConfigError listing every malformed axis.
  void validate() const;
  bool has_categorical() const;
  /// Number of grid points (saturates at SIZE_MAX).
  std::size_t grid_size() const;

  /// Uniform draw per axis (log-uniform on log axes; uniform integer on
  /// linear integer axes; uniform choice on categorical axes).
  Config sample(std::mt19937_64& rng) const;
  /// Config from search coordinates (continuous/integer axes only).
  Config from_search(std::span<const double> s) const;
  /// Config from unit-cube coordinates (continuous/integer axes only).
  Config from_unit(std::span<const double> u) const;
};

}  // namespace cvd::tuning
