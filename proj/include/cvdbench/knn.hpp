#pragma once

#include "cvdbench/learners.hpp"

namespace cvd::learners {

/// k-nearest-neighbour vote over stored training rows. Euclidean distance;
/// equal distances are ordered by lower training row index. When k exceeds the
/// training size, every row votes.
class KnnModel final : public Classifier {
 public:
  KnnModel(Matrix rows, std::vector<int> labels, std::size_t k);

  LearnerKind kind() const override { return LearnerKind::Knn; }
  std::size_t input_columns() const override { return rows_.cols(); }
  std::vector<double> predict_proba(const Matrix& rows) const override;
  void save(std::ostream& out) const override;
  static std::shared_ptr<const KnnModel> load(std::istream& in);

  std::size_t k() const { return k_; }

 private:
  Matrix rows_;
  std::vector<int> labels_;
  std::size_t k_;
};

}  // namespace cvd::learners
