#pragma once

#include <span>
#include <vector>

#include "cvdbench/common.hpp"

namespace cvd::tuning {

/// Zero-mean GP with unit-variance squared-exponential kernel
/// k(a, b) = exp(-|a - b|^2 / (2 l^2)) and diagonal jitter. Targets are
/// standardised internally and predictions mapped back.
class GaussianProcess {
 public:
  /// Throws DomainError if the kernel matrix is not positive definite.
  GaussianProcess(Matrix x, std::vector<double> y, double lengthscale, double jitter = 1e-6);

  struct Prediction {
    double mean = 0.0;
    double sd = 0.0;
  };
  Prediction predict(std::span<const double> point) const;

  /// Log marginal likelihood of the standardised targets.
  double log_marginal_likelihood() const { return lml_; }
  double lengthscale() const { return lengthscale_; }

 private:
  double kernel(std::span<const double> a, std::span<const double> b) const;

  Matrix x_;
  double lengthscale_;
  double y_mean_ = 0.0;
  double y_scale_ = 1.0;
  Matrix chol_;                // lower Cholesky factor of K + jitter I
  std::vector<double> alpha_;  // (K + jitter I)^-1 y_std
  double lml_ = 0.0;
};

/// GP with the lengthscale from `grid` that maximises the log marginal
/// likelihood (first wins on ties). Lengthscales whose kernel matrix fails
/// to factor are skipped; if all fail the jitter is raised tenfold and the
/// grid retried.
GaussianProcess fit_gp(const Matrix& x, std::span<const double> y, std::span<const double> grid,
                       double jitter = 1e-6);

/// Expected improvement over `best` for maximisation; always >= 0.
double expected_improvement(double mean, double sd, double best);

}  // namespace cvd::tuning
