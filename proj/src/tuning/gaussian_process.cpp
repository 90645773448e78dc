#include "cvdbench/gaussian_process.hpp"

#include <cmath>
#include <numbers>

#include "cvdbench/special_functions.hpp"

namespace cvd::tuning {

GaussianProcess::GaussianProcess(Matrix x, std::vector<double> y, double lengthscale, double jitter)
    : x_(std::move(x)), lengthscale_(lengthscale) {
  const std::size_t n = x_.rows();
  if (n == 0 || y.size() != n) throw DomainError("gaussian process: need matching non-empty inputs");
  if (!(lengthscale > 0.0)) throw DomainError("gaussian process: lengthscale must be positive");

  double m = 0.0;
  for (double v : y) m += v;
  m /= static_cast<double>(n);
  double ss = 0.0;
  for (double v : y) ss += (v - m) * (v - m);
  const double sd = n > 1 ? std::sqrt(ss / static_cast<double>(n)) : 0.0;
  y_mean_ = m;
  y_scale_ = sd > 0.0 ? sd : 1.0;
  std::vector<double> ys(n);
  for (std::size_t i = 0; i < n; ++i) ys[i] = (y[i] - y_mean_) / y_scale_;

  chol_ = Matrix(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double s = kernel(x_.row(i), x_.row(j)) + (i == j ? jitter : 0.0);
      for (std::size_t k = 0; k < j; ++k) s -= chol_(i, k) * chol_(j, k);
      if (i == j) {
        if (!(s > 0.0)) throw DomainError("gaussian process: kernel matrix is not positive definite");
        chol_(i, i) = std::sqrt(s);
      } else {
        chol_(i, j) = s / chol_(j, j);
      }
    }
  }
  // alpha = L^-T L^-1 y
  std::vector<double> z(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = ys[i];
    for (std::size_t k = 0; k < i; ++k) s -= chol_(i, k) * z[k];
    z[i] = s / chol_(i, i);
  }
  alpha_.assign(n, 0.0);
  for (std::size_t i = n; i-- > 0;) {
    double s = z[i];
    for (std::size_t k = i + 1; k < n; ++k) s -= chol_(k, i) * alpha_[k];
    alpha_[i] = s / chol_(i, i);
  }
  double fit = 0.0;
  double logdet = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    fit += ys[i] * alpha_[i];
    logdet += std::log(chol_(i, i));
  }
  lml_ = -0.5 * fit - logdet - 0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);
}

double GaussianProcess::kernel(std::span<const double> a, std::span<const double> b) const {
  double d2 = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d2 += (a[i] - b[i]) * (a[i] - b[i]);
  return std::exp(-d2 / (2.0 * lengthscale_ * lengthscale_));
}

GaussianProcess::Prediction GaussianProcess::predict(std::span<const double> point) const {
  const std::size_t n = x_.rows();
  std::vector<double> k(n);
  for (std::size_t i = 0; i < n; ++i) k[i] = kernel(point, x_.row(i));
  double mu = 0.0;
  for (std::size_t i = 0; i < n; ++i) mu += k[i] * alpha_[i];
  // v = L^-1 k; var = k(x,x) - v.v
  std::vector<double> v(n);
  double vv = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double s = k[i];
    for (std::size_t j = 0; j < i; ++j) s -= chol_(i, j) * v[j];
    v[i] = s / chol_(i, i);
    vv += v[i] * v[i];
  }
  const double var = std::max(0.0, 1.0 - vv);
  return {y_mean_ + y_scale_ * mu, y_scale_ * std::sqrt(var)};
}

GaussianProcess fit_gp(const Matrix& x, std::span<const double> y, std::span<const double> grid, double jitter) {
  if (grid.empty()) throw DomainError("fit_gp: empty lengthscale grid");
  const std::vector<double> targets(y.begin(), y.end());
  for (int attempt = 0; attempt < 8; ++attempt, jitter *= 10.0) {
    const GaussianProcess* best = nullptr;
    std::vector<GaussianProcess> fitted;
    fitted.reserve(grid.size());
    for (double l : grid) {
      try {
        fitted.emplace_back(x, targets, l, jitter);
      } catch (const DomainError&) {
        continue;
      }
    }
    for (const auto& gp : fitted) {
      if (!best || gp.log_marginal_likelihood() > best->log_marginal_likelihood()) best = &gp;
    }
    if (best) return *best;
  }
  throw DomainError("fit_gp: kernel matrix could not be factored");
}

double expected_improvement(double mean, double sd, double best) {
  const double gain = mean - best;
  if (!(sd > 0.0)) return std::max(gain, 0.0);
  const double z = gain / sd;
  return std::max(0.0, gain * stats::normal_cdf(z) + sd * stats::normal_pdf(z));
}

}  // namespace cvd::tuning
