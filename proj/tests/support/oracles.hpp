#pragma once

// Independent reference computations used by the unit and acceptance tests.

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "cvdbench/common.hpp"

namespace cvd::testing {

// Upper tail probabilities by numerical integration of the densities. The
// densities are evaluated in log space; exp_sinh handles [x, inf).

inline double t_density(double u, double df) {
  const double log_c = std::lgamma((df + 1) / 2) - std::lgamma(df / 2) - 0.5 * std::log(df * M_PI);
  return std::exp(log_c - (df + 1) / 2 * std::log1p(u * u / df));
}

inline double chi_square_density(double u, double df) {
  if (u <= 0) return 0.0;
  const double k = df / 2;
  return std::exp((k - 1) * std::log(u) - u / 2 - k * std::log(2.0) - std::lgamma(k));
}

inline double f_density(double u, double d1, double d2) {
  if (u <= 0) return 0.0;
  const double log_beta = std::lgamma(d1 / 2) + std::lgamma(d2 / 2) - std::lgamma((d1 + d2) / 2);
  return std::exp(0.5 * d1 * std::log(d1 / d2) + (d1 / 2 - 1) * std::log(u) -
                  (d1 + d2) / 2 * std::log1p(d1 * u / d2) - log_beta);
}

template <typename F>
double upper_tail(F density, double x) {
  boost::math::quadrature::exp_sinh<double> integrator;
  return integrator.integrate([&](double u) { return density(x + u); }, 0.0, std::numeric_limits<double>::infinity());
}

template <typename F>
double lower_integral(F density, double x) {
  boost::math::quadrature::tanh_sinh<double> integrator;
  return integrator.integrate(density, 0.0, x);
}

inline double t_two_sided_oracle(double t, double df) {
  const double a = std::abs(t);
  // for small |t| integrate the body instead of the tail
  if (a < 1.0) return 1.0 - 2.0 * lower_integral([df](double u) { return t_density(u, df); }, a);
  return 2.0 * upper_tail([df](double u) { return t_density(u, df); }, a);
}

inline double chi_square_sf_oracle(double x, double df) {
  if (x <= 0) return 1.0;
  return upper_tail([df](double u) { return chi_square_density(u, df); }, x);
}

inline double f_sf_oracle(double f, double d1, double d2) {
  if (f <= 0) return 1.0;
  return upper_tail([d1, d2](double u) { return f_density(u, d1, d2); }, f);
}

/// AUC by counting every (positive, negative) pair; ties count one half.
inline double auc_pairs(std::span<const double> scores, std::span<const int> labels) {
  double wins = 0.0;
  double pairs = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] != 1) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (labels[j] != 0) continue;
      pairs += 1.0;
      if (scores[i] > scores[j]) {
        wins += 1.0;
      } else if (scores[i] == scores[j]) {
        wins += 0.5;
      }
    }
  }
  return wins / pairs;
}

struct RootSplit {
  bool leaf = true;
  int feature = -1;
  double threshold = 0.0;
};

/// Best root split by enumerating every feature and every midpoint between
/// adjacent distinct values. Score: 2 pL qL / nL + 2 pR qR / nR (lower is
/// better); ties go to the lower feature, then the lower threshold.
inline RootSplit exhaustive_root_split(const Matrix& x, std::span<const int> y, double min_leaf) {
  double pos = 0;
  for (int v : y) pos += v;
  const double n = static_cast<double>(y.size());
  RootSplit best;
  if (pos == 0 || pos == n || n < 2 * min_leaf) return best;
  double best_score = std::numeric_limits<double>::infinity();
  for (std::size_t f = 0; f < x.cols(); ++f) {
    std::vector<double> values = x.column(f);
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());
    for (std::size_t k = 0; k + 1 < values.size(); ++k) {
      const double lo = values[k];
      const double hi = values[k + 1];
      double t = lo + (hi - lo) * 0.5;
      if (!(t < hi)) t = lo;
      double pl = 0, nl = 0, pr = 0, nr = 0;
      for (std::size_t r = 0; r < y.size(); ++r) {
        const bool left = x(r, f) <= lo;
        (left ? (y[r] ? pl : nl) : (y[r] ? pr : nr)) += 1;
      }
      if (pl + nl < min_leaf || pr + nr < min_leaf) continue;
      const double score = 2.0 * pl * nl / (pl + nl) + 2.0 * pr * nr / (pr + nr);
      if (score < best_score) {
        best_score = score;
        best = {false, static_cast<int>(f), t};
      }
    }
  }
  return best;
}

/// Central finite-difference gradient.
template <typename F>
std::vector<double> central_difference(F f, std::vector<double> at, double h) {
  std::vector<double> g(at.size());
  for (std::size_t i = 0; i < at.size(); ++i) {
    const double saved = at[i];
    at[i] = saved + h;
    const double up = f(at);
    at[i] = saved - h;
    const double down = f(at);
    at[i] = saved;
    g[i] = (up - down) / (2 * h);
  }
  return g;
}

}  // namespace cvd::testing
