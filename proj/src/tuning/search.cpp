#include "cvdbench/search.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <ostream>
#include <random>

#include "cvdbench/common.hpp"
#include "cvdbench/gaussian_process.hpp"

namespace cvd::tuning {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

Trial evaluate(const Objective& objective, Config config, std::size_t index) {
  Trial t;
  t.index = index;
  t.config = std::move(config);
  const auto start = std::chrono::steady_clock::now();
  try {
    const auto value = objective(t.config);
    t.mean = value.mean;
    t.sd = value.sd;
    if (!std::isfinite(value.mean)) {
      t.failed = true;
      t.error = "non-finite objective value";
    }
  } catch (const std::exception& e) {
    t.failed = true;
    t.error = e.what();
  }
  if (t.failed) {
    t.mean = std::numeric_limits<double>::quiet_NaN();
    t.sd = t.mean;
  }
  t.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return t;
}

void require_numeric(const SearchSpace& space, const char* strategy) {
  if (space.has_categorical()) {
    throw ConfigError(std::string(strategy) + " supports continuous and integer axes only");
  }
}

}  // namespace

std::optional<std::size_t> TrialLog::best_index() const {
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < trials.size(); ++i) {
    if (trials[i].failed) continue;
    if (!best || trials[i].mean > trials[*best].mean) best = i;
  }
  return best;
}

const Trial& TrialLog::best() const {
  const auto i = best_index();
  if (!i) throw Error(strategy + ": every trial failed");
  return trials[*i];
}

std::vector<double> TrialLog::best_so_far() const {
  std::vector<double> out;
  double best = kNegInf;
  for (const auto& t : trials) {
    if (!t.failed) best = std::max(best, t.mean);
    out.push_back(best);
  }
  return out;
}

double TrialLog::total_seconds() const {
  double s = 0.0;
  for (const auto& t : trials) s += t.seconds;
  return s;
}

void TrialLog::write_csv(std::ostream& out) const {
  out << "trial,config,mean,sd,seconds,status\n";
  for (const auto& t : trials) {
    out << t.index << ',' << format_config(t.config) << ',' << format_exact(t.mean) << ',' << format_exact(t.sd)
        << ',' << format_fixed(t.seconds, 3) << ',' << (t.failed ? "failed" : "ok") << '\n';
  }
}

TrialLog grid_search(const SearchSpace& space, const Objective& objective, std::size_t cap) {
  space.validate();
  const std::size_t total = space.grid_size();
  if (total > cap) {
    throw ConfigError("grid search would evaluate " + std::to_string(total) + " configurations, over the cap of " +
                      std::to_string(cap));
  }
  std::vector<std::vector<double>> values;
  for (const auto& a : space.axes) values.push_back(a.grid_values());

  TrialLog log{"grid", total, 0, {}};
  std::vector<std::size_t> digit(values.size(), 0);
  for (std::size_t t = 0; t < total; ++t) {
    Config config;
    for (std::size_t a = 0; a < values.size(); ++a) config.emplace_back(space.axes[a].name, values[a][digit[a]]);
    log.trials.push_back(evaluate(objective, std::move(config), t));
    for (std::size_t a = values.size(); a-- > 0;) {
      if (++digit[a] < values[a].size()) break;
      digit[a] = 0;
    }
  }
  return log;
}

TrialLog random_search(const SearchSpace& space, std::size_t budget, const Objective& objective,
                       std::uint64_t seed) {
  space.validate();
  if (budget == 0) throw ConfigError("random search budget must be at least 1");
  std::mt19937_64 rng(seed);
  TrialLog log{"random", budget, seed, {}};
  for (std::size_t t = 0; t < budget; ++t) log.trials.push_back(evaluate(objective, space.sample(rng), t));
  return log;
}

TrialLog bayes_opt(const SearchSpace& space, std::size_t budget, const Objective& objective, std::uint64_t seed,
                   const BayesOptions& options) {
  space.validate();
  require_numeric(space, "bayesian optimisation");
  if (budget <= options.initial_points) {
    throw ConfigError("bayesian optimisation budget must exceed the " + std::to_string(options.initial_points) +
                      " initial points");
  }
  const std::size_t d = space.axes.size();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  TrialLog log{"bayes", budget, seed, {}};

  Matrix observed(0, d);
  std::vector<double> scores;
  auto run = [&](const std::vector<double>& u) {
    auto trial = evaluate(objective, space.from_unit(u), log.trials.size());
    if (!trial.failed) {
      observed.append_row(u);
      scores.push_back(trial.mean);
    }
    log.trials.push_back(std::move(trial));
  };

  std::vector<double> u(d);
  for (std::size_t i = 0; i < options.initial_points; ++i) {
    for (auto& v : u) v = unit(rng);
    run(u);
  }
  Matrix candidates(options.candidates, d);
  while (log.trials.size() < budget) {
    for (std::size_t c = 0; c < options.candidates; ++c) {
      for (std::size_t j = 0; j < d; ++j) candidates(c, j) = unit(rng);
    }
    if (scores.size() < 2) {
      const auto row = candidates.row(0);
      run(std::vector<double>(row.begin(), row.end()));
      continue;
    }
    const auto gp = fit_gp(observed, scores, options.lengthscales, options.jitter);
    const double incumbent = *std::max_element(scores.begin(), scores.end());
    std::size_t pick = 0;
    double best_ei = -1.0;
    for (std::size_t c = 0; c < options.candidates; ++c) {
      const auto p = gp.predict(candidates.row(c));
      const double ei = expected_improvement(p.mean, p.sd, incumbent);
      if (ei > best_ei) {
        best_ei = ei;
        pick = c;
      }
    }
    const auto row = candidates.row(pick);
    run(std::vector<double>(row.begin(), row.end()));
  }
  return log;
}

TrialLog pso_search(const SearchSpace& space, const PsoOptions& options, const Objective& objective,
                    std::uint64_t seed, const SwarmObserver& observer) {
  space.validate();
  require_numeric(space, "particle swarm");
  if (options.swarm_size == 0) throw ConfigError("particle swarm size must be at least 1");
  if (options.iterations == 0) throw ConfigError("particle swarm needs at least 1 iteration");
  const std::size_t d = space.axes.size();
  const std::size_t m = options.swarm_size;
  std::vector<double> lo(d);
  std::vector<double> hi(d);
  std::vector<double> vmax(d);
  for (std::size_t j = 0; j < d; ++j) {
    lo[j] = space.axes[j].search_min();
    hi[j] = space.axes[j].search_max();
    vmax[j] = options.velocity_clamp * (hi[j] - lo[j]);
  }

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  SwarmState s;
  s.position.assign(m, std::vector<double>(d));
  s.velocity.assign(m, std::vector<double>(d));
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      s.position[i][j] = lo[j] + (hi[j] - lo[j]) * unit(rng);
      s.velocity[i][j] = vmax[j] * (2.0 * unit(rng) - 1.0);
    }
  }
  s.best_position = s.position;
  s.best_score.assign(m, kNegInf);
  s.global_best_position = s.position[0];
  s.global_best_score = kNegInf;

  TrialLog log{"pso", m * options.iterations, seed, {}};
  const double span = options.iterations > 1 ? static_cast<double>(options.iterations - 1) : 1.0;
  for (std::size_t it = 0; it < options.iterations; ++it) {
    const double frac = static_cast<double>(it) / span;
    s.iteration = it;
    s.w = options.w_start + (options.w_end - options.w_start) * frac;
    s.c1 = options.c1_start + (options.c1_end - options.c1_start) * frac;
    s.c2 = options.c2_start + (options.c2_end - options.c2_start) * frac;

    for (std::size_t i = 0; i < m; ++i) {
      auto trial = evaluate(objective, space.from_search(s.position[i]), log.trials.size());
      if (!trial.failed && trial.mean > s.best_score[i]) {
        s.best_score[i] = trial.mean;
        s.best_position[i] = s.position[i];
      }
      log.trials.push_back(std::move(trial));
    }
    for (std::size_t i = 0; i < m; ++i) {
      if (s.best_score[i] > s.global_best_score) {
        s.global_best_score = s.best_score[i];
        s.global_best_position = s.best_position[i];
      }
    }
    if (observer) observer(s);
    if (it + 1 == options.iterations) break;

    for (std::size_t i = 0; i < m; ++i) {
      const bool has_best = s.best_score[i] > kNegInf;
      const bool has_global = s.global_best_score > kNegInf;
      for (std::size_t j = 0; j < d; ++j) {
        const double r1 = unit(rng);
        const double r2 = unit(rng);
        double v = s.w * s.velocity[i][j];
        if (has_best) v += s.c1 * r1 * (s.best_position[i][j] - s.position[i][j]);
        if (has_global) v += s.c2 * r2 * (s.global_best_position[j] - s.position[i][j]);
        v = std::clamp(v, -vmax[j], vmax[j]);
        double x = s.position[i][j] + v;
        if (x > hi[j]) {
          x = 2.0 * hi[j] - x;
          v = -v;
        } else if (x < lo[j]) {
          x = 2.0 * lo[j] - x;
          v = -v;
        }
        s.position[i][j] = std::clamp(x, lo[j], hi[j]);
        s.velocity[i][j] = v;
      }
    }
  }
  return log;
}

}  // namespace cvd::tuning
