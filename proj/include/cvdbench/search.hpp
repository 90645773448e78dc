#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "cvdbench/search_space.hpp"

namespace cvd::tuning {

/// Objective result; larger mean is better.
struct ObjectiveValue {
  double mean = 0.0;
  double sd = 0.0;
};

/// An objective that throws or returns a non-finite mean records a failed
/// trial instead of aborting the search.
using Objective = std::function<ObjectiveValue(const Config&)>;

struct Trial {
  std::size_t index = 0;
  Config config;
  double mean = 0.0;
  double sd = 0.0;
  double seconds = 0.0;
  bool failed = false;
  std::string error;
};

struct TrialLog {
  std::string strategy;
  std::size_t budget = 0;
  std::uint64_t seed = 0;
  std::vector<Trial> trials;

  /// Highest-scoring successful trial, earliest on ties.
  std::optional<std::size_t> best_index() const;
  const Trial& best() const;  // throws Error when every trial failed
  /// Best score after each trial (-inf until the first success).
  std::vector<double> best_so_far() const;
  double total_seconds() const;

  /// Columns: trial, config, mean, sd, seconds, status.
  void write_csv(std::ostream& out) const;
};

/// Full Cartesian product in odometer order (last axis varies fastest).
/// Refuses with ConfigError, naming the count, when it exceeds `cap`.
TrialLog grid_search(const SearchSpace& space, const Objective& objective, std::size_t cap = 10000);

TrialLog random_search(const SearchSpace& space, std::size_t budget, const Objective& objective,
                       std::uint64_t seed);

struct BayesOptions {
  std::size_t initial_points = 5;
  std::size_t candidates = 1000;
  double jitter = 1e-6;
  std::vector<double> lengthscales{0.05, 0.1, 0.2, 0.4, 0.8};
};

/// GP-EI Bayesian optimisation in the unit cube of search coordinates.
/// Requires budget > initial_points and no categorical axes.
TrialLog bayes_opt(const SearchSpace& space, std::size_t budget, const Objective& objective, std::uint64_t seed,
                   const BayesOptions& options = {});

struct PsoOptions {
  std::size_t swarm_size = 20;
  std::size_t iterations = 50;
  double w_start = 0.9;
  double w_end = 0.4;
  double c1_start = 2.5;
  double c1_end = 0.5;
  double c2_start = 0.5;
  double c2_end = 2.5;
  double velocity_clamp = 0.2;  // fraction of each axis range (search coordinates)
};

/// Swarm snapshot in search coordinates, reported after each iteration's
/// evaluations and best updates.
struct SwarmState {
  std::size_t iteration = 0;
  double w = 0.0;
  double c1 = 0.0;
  double c2 = 0.0;
  std::vector<std::vector<double>> position;
  std::vector<std::vector<double>> velocity;
  std::vector<std::vector<double>> best_position;
  std::vector<double> best_score;  // -inf until a particle has a successful evaluation
  std::vector<double> global_best_position;
  double global_best_score = 0.0;
};

using SwarmObserver = std::function<void(const SwarmState&)>;

/// Particle swarm with linearly time-varying inertia and acceleration
/// coefficients, velocity clamping and reflection at the bounds. Evaluates
/// exactly swarm_size * iterations configurations.
TrialLog pso_search(const SearchSpace& space, const PsoOptions& options, const Objective& objective,
                    std::uint64_t seed, const SwarmObserver& observer = {});

}  // namespace cvd::tuning
