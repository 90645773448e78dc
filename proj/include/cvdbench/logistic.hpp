#pragma once

#include <span>
#include <vector>

#include "cvdbench/common.hpp"
#include "cvdbench/learners.hpp"

namespace cvd::learners {

/// Mean logistic loss plus (lambda/2)||w||^2 over parameters laid out as
/// [intercept, w_1 .. w_d]. The intercept is not penalised.
class LogisticObjective {
 public:
  LogisticObjective(const Matrix& x, std::span<const int> y, double lambda);

  std::size_t parameter_count() const { return x_.cols() + 1; }
  double loss(std::span<const double> params) const;
  std::vector<double> gradient(std::span<const double> params) const;
  /// Loss and gradient in one pass.
  double loss_and_gradient(std::span<const double> params, std::vector<double>& grad) const;

 private:
  const Matrix& x_;
  std::span<const int> y_;
  double lambda_;
};

struct LogisticOptions {
  double lambda = 0.0;
  double step = 0.1;
  std::size_t max_iterations = 10000;
  double tolerance = 1e-8;  // relative loss change
};

struct LogisticFit {
  std::vector<double> params;  // [intercept, w...]
  double loss = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
};

/// Full-batch gradient descent. The step is halved whenever a trial step
/// fails to decrease the loss; stops when the relative loss change drops
/// below the tolerance or the iteration cap is hit (converged = false).
LogisticFit fit_logistic_regression(const Matrix& x, std::span<const int> y,
                                    const LogisticOptions& options = {});

class LogisticModel final : public Classifier {
 public:
  LogisticModel(double intercept, std::vector<double> weights)
      : intercept_(intercept), weights_(std::move(weights)) {}

  LearnerKind kind() const override { return LearnerKind::Logistic; }
  std::size_t input_columns() const override { return weights_.size(); }
  std::vector<double> predict_proba(const Matrix& rows) const override;
  void save(std::ostream& out) const override;
  static std::shared_ptr<const LogisticModel> load(std::istream& in);

  double intercept() const { return intercept_; }
  const std::vector<double>& weights() const { return weights_; }

 private:
  double intercept_;
  std::vector<double> weights_;
};

double sigmoid(double z);

}  // namespace cvd::learners
