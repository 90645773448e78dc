#include "cvdbench/logistic.hpp"

#include <cmath>

#include "serial.hpp"

namespace cvd::learners {
namespace {

// log(1 + e^z) without overflow.
double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::fabs(z))); }

}  // namespace

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

LogisticObjective::LogisticObjective(const Matrix& x, std::span<const int> y, double lambda)
    : x_(x), y_(y), lambda_(lambda) {
  if (x.rows() != y.size()) throw SchemaError("logistic: row count differs from label count");
  if (x.rows() == 0) throw DomainError("logistic: no training rows");
}

double LogisticObjective::loss(std::span<const double> params) const {
  const std::size_t n = x_.rows();
  const std::size_t d = x_.cols();
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = x_.row(i);
    double z = params[0];
    for (std::size_t j = 0; j < d; ++j) z += params[j + 1] * row[j];
    total += softplus(z) - (y_[i] == 1 ? z : 0.0);
  }
  double penalty = 0.0;
  for (std::size_t j = 1; j <= d; ++j) penalty += params[j] * params[j];
  return total / static_cast<double>(n) + 0.5 * lambda_ * penalty;
}

double LogisticObjective::loss_and_gradient(std::span<const double> params,
                                            std::vector<double>& grad) const {
  const std::size_t n = x_.rows();
  const std::size_t d = x_.cols();
  grad.assign(d + 1, 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = x_.row(i);
    double z = params[0];
    for (std::size_t j = 0; j < d; ++j) z += params[j + 1] * row[j];
    total += softplus(z) - (y_[i] == 1 ? z : 0.0);
    const double r = sigmoid(z) - static_cast<double>(y_[i]);
    grad[0] += r;
    for (std::size_t j = 0; j < d; ++j) grad[j + 1] += r * row[j];
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  double penalty = 0.0;
  grad[0] *= inv_n;
  for (std::size_t j = 1; j <= d; ++j) {
    grad[j] = grad[j] * inv_n + lambda_ * params[j];
    penalty += params[j] * params[j];
  }
  return total * inv_n + 0.5 * lambda_ * penalty;
}

std::vector<double> LogisticObjective::gradient(std::span<const double> params) const {
  std::vector<double> grad;
  loss_and_gradient(params, grad);
  return grad;
}

LogisticFit fit_logistic_regression(const Matrix& x, std::span<const int> y,
                                    const LogisticOptions& options) {
  const LogisticObjective objective(x, y, options.lambda);
  LogisticFit fit;
  fit.params.assign(objective.parameter_count(), 0.0);

  std::vector<double> grad;
  std::vector<double> trial_grad;
  std::vector<double> trial(fit.params.size());
  double current = objective.loss_and_gradient(fit.params, grad);
  double step = options.step;

  while (fit.iterations < options.max_iterations) {
    ++fit.iterations;
    for (std::size_t j = 0; j < trial.size(); ++j) trial[j] = fit.params[j] - step * grad[j];
    const double next = objective.loss_and_gradient(trial, trial_grad);
    if (!(next < current)) {
      step *= 0.5;
      if (step < 1e-30) {  // no descent direction left: stationary point
        fit.converged = true;
        break;
      }
      continue;
    }
    const double change = std::fabs(current - next) / std::max(std::fabs(current), 1e-300);
    fit.params.swap(trial);
    grad.swap(trial_grad);
    current = next;
    if (change < options.tolerance) {
      fit.converged = true;
      break;
    }
  }
  fit.loss = current;
  return fit;
}

std::vector<double> LogisticModel::predict_proba(const Matrix& rows) const {
  std::vector<double> out(rows.rows());
  for (std::size_t i = 0; i < rows.rows(); ++i) {
    const auto row = rows.row(i);
    double z = intercept_;
    for (std::size_t j = 0; j < weights_.size(); ++j) z += weights_[j] * row[j];
    out[i] = sigmoid(z);
  }
  return out;
}

void LogisticModel::save(std::ostream& out) const {
  out << "intercept ";
  serial::write_number(out, intercept_);
  out << '\n';
  serial::write_list(out, "weights", weights_);
}

std::shared_ptr<const LogisticModel> LogisticModel::load(std::istream& in) {
  serial::expect(in, "intercept");
  const double intercept = serial::read_number(in);
  auto weights = serial::read_list(in, "weights");
  return std::make_shared<const LogisticModel>(intercept, std::move(weights));
}

}  // namespace cvd::learners
