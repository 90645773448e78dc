#include "cvdbench/knn.hpp"

#include <algorithm>
#include <utility>

#include "serial.hpp"

namespace cvd::learners {

KnnModel::KnnModel(Matrix rows, std::vector<int> labels, std::size_t k)
    : rows_(std::move(rows)), labels_(std::move(labels)), k_(k) {
  if (rows_.rows() != labels_.size()) throw SchemaError("knn: row count differs from label count");
  if (rows_.rows() == 0) throw DomainError("knn: no training rows");
  if (k_ == 0) throw ConfigError("knn: k must be at least 1");
}

std::vector<double> KnnModel::predict_proba(const Matrix& rows) const {
  const std::size_t n = rows_.rows();
  const std::size_t d = rows_.cols();
  const std::size_t k = std::min(k_, n);
  std::vector<double> out(rows.rows());
  std::vector<std::pair<double, std::size_t>> dist(n);
  for (std::size_t q = 0; q < rows.rows(); ++q) {
    const auto query = rows.row(q);
    for (std::size_t i = 0; i < n; ++i) {
      const auto row = rows_.row(i);
      double s = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        const double diff = row[j] - query[j];
        s += diff * diff;
      }
      dist[i] = {s, i};
    }
    if (k < n) {
      std::nth_element(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k - 1), dist.end());
    }
    std::size_t positives = 0;
    for (std::size_t i = 0; i < k; ++i) positives += labels_[dist[i].second] == 1;
    out[q] = static_cast<double>(positives) / static_cast<double>(k);
  }
  return out;
}

void KnnModel::save(std::ostream& out) const {
  out << "k " << k_ << '\n';
  out << "rows " << rows_.rows() << ' ' << rows_.cols() << '\n';
  for (std::size_t i = 0; i < rows_.rows(); ++i) {
    out << labels_[i];
    for (double v : rows_.row(i)) out << ' ' << format_exact(v);
    out << '\n';
  }
}

std::shared_ptr<const KnnModel> KnnModel::load(std::istream& in) {
  serial::expect(in, "k");
  const auto k = serial::read_size(in);
  serial::expect(in, "rows");
  const auto n = serial::read_size(in);
  const auto d = serial::read_size(in);
  Matrix rows(n, d);
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    labels[i] = static_cast<int>(serial::read_number(in));
    for (std::size_t j = 0; j < d; ++j) rows(i, j) = serial::read_number(in);
  }
  return std::make_shared<const KnnModel>(std::move(rows), std::move(labels), k);
}

}  // namespace cvd::learners
