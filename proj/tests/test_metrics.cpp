#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "cvdbench/metrics.hpp"
#include "support/oracles.hpp"

using namespace cvd;
using namespace cvd::metrics;

namespace {

struct Fixture {
  std::vector<double> probs;
  std::vector<int> labels;
};

// Both classes present; scores drawn from a coarse grid so ties are common.
Fixture random_fixture(std::mt19937_64& rng, std::size_t max_n) {
  Fixture f;
  const std::size_t n = 2 + rng() % (max_n - 1);
  const unsigned grid = 2 + static_cast<unsigned>(rng() % 50);
  for (std::size_t i = 0; i < n; ++i) {
    f.probs.push_back(static_cast<double>(rng() % (grid + 1)) / grid);
    f.labels.push_back(static_cast<int>(rng() % 2));
  }
  f.labels[0] = 1;
  f.labels[1] = 0;
  return f;
}

}  // namespace

TEST_CASE("confusion counts") {
  const std::vector<double> p{0.9, 0.4, 0.6, 0.1};
  const std::vector<int> y{1, 1, 0, 0};
  const auto cm = confusion(p, y, 0.5);
  CHECK(cm == ConfusionMatrix{1, 1, 1, 1});
  const std::vector<int> flipped{0, 0, 1, 1};
  const auto inv = confusion(p, flipped, 0.5);
  CHECK(inv.tp == cm.fp);
  CHECK(inv.fp == cm.tp);
  CHECK(inv.tn == cm.fn);
  CHECK(inv.fn == cm.tn);

  const std::vector<double> perfect{1, 0, 1};
  const std::vector<int> perfect_y{1, 0, 1};
  const auto pc = confusion(perfect, perfect_y);
  CHECK(pc.fp == 0);
  CHECK(pc.fn == 0);

  const std::vector<double> half{0.5};
  const std::vector<int> one{1};
  CHECK(confusion(half, one, 0.5).tp == 1);

  const std::vector<int> short_y{1};
  CHECK_THROWS_AS(confusion(p, short_y), SchemaError);
}

TEST_CASE("threshold metrics") {
  const auto m = threshold_metrics({1, 1, 1, 1});
  CHECK(m.accuracy == 0.5);
  CHECK(m.precision == 0.5);
  CHECK(m.recall == 0.5);
  CHECK(m.f1 == 0.5);

  const auto perfect = threshold_metrics({3, 0, 4, 0});
  CHECK(perfect.accuracy == 1.0);
  CHECK(perfect.precision == 1.0);
  CHECK(perfect.recall == 1.0);
  CHECK(perfect.f1 == 1.0);

  const auto none = threshold_metrics({0, 0, 5, 3});
  CHECK(none.recall == 0.0);
  CHECK(none.f1 == 0.0);
  CHECK(none.precision_undefined);
  CHECK_FALSE(none.recall_undefined);

  std::mt19937_64 rng(4);
  for (int k = 0; k < 500; ++k) {
    ConfusionMatrix cm{rng() % 50, rng() % 50, rng() % 50, rng() % 50 + 1};
    const auto t = threshold_metrics(cm);
    CHECK(t.accuracy == static_cast<double>(cm.tp + cm.tn) / static_cast<double>(cm.total()));
  }
}

TEST_CASE("ROC AUC") {
  const std::vector<double> s{0.9, 0.8, 0.3, 0.2};
  const std::vector<int> y{1, 0, 1, 0};
  CHECK(roc_auc(s, y) == 0.75);
  const std::vector<int> ordered{1, 1, 0, 0};
  CHECK(roc_auc(s, ordered) == 1.0);
  const std::vector<double> flat(4, 0.3);
  CHECK(roc_auc(flat, y) == 0.5);
  const std::vector<int> single(4, 1);
  CHECK_THROWS_AS(roc_auc(s, single), DomainError);

  std::mt19937_64 rng(8);
  for (int k = 0; k < 300; ++k) {
    const auto f = random_fixture(rng, 200);
    const double auc = roc_auc(f.probs, f.labels);
    CHECK(auc == testing::auc_pairs(f.probs, f.labels));

    std::vector<int> inverted(f.labels.size());
    std::transform(f.labels.begin(), f.labels.end(), inverted.begin(), [](int v) { return 1 - v; });
    CHECK(auc + roc_auc(f.probs, inverted) == 1.0);

    std::vector<double> transformed(f.probs.size());
    std::transform(f.probs.begin(), f.probs.end(), transformed.begin(),
                   [](double v) { return std::exp(3.0 * v) - 7.0; });
    CHECK(roc_auc(transformed, f.labels) == auc);
  }
}

TEST_CASE("ROC curve") {
  const std::vector<double> s{0.9, 0.8, 0.8, 0.2};
  const std::vector<int> y{1, 0, 1, 0};
  const auto pts = roc_curve(s, y);
  REQUIRE(pts.size() == 4);
  CHECK(std::isinf(pts.front().threshold));
  CHECK(pts.front().fpr == 0.0);
  CHECK(pts.front().tpr == 0.0);
  CHECK(pts.back().fpr == 1.0);
  CHECK(pts.back().tpr == 1.0);
  double area = 0.0;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    CHECK(pts[i].fpr >= pts[i - 1].fpr);
    CHECK(pts[i].tpr >= pts[i - 1].tpr);
    area += (pts[i].fpr - pts[i - 1].fpr) * (pts[i].tpr + pts[i - 1].tpr) / 2;
  }
  CHECK(area == doctest::Approx(roc_auc(s, y)).epsilon(1e-15));
}

TEST_CASE("Brier score") {
  const std::vector<double> p{0.8, 0.3};
  const std::vector<int> y{1, 0};
  CHECK(brier(p, y) == doctest::Approx(0.065).epsilon(1e-15));
  const std::vector<double> exact{1, 0, 1};
  const std::vector<int> ey{1, 0, 1};
  CHECK(brier(exact, ey) == 0.0);
}

TEST_CASE("bin edges") {
  CHECK(bin_index(0.0, 10) == 0);
  CHECK(bin_index(0.1, 10) == 0);
  CHECK(bin_index(std::nextafter(0.1, 1.0), 10) == 1);
  CHECK(bin_index(0.3, 10) == 2);
  CHECK(bin_index(0.7, 10) == 6);
  CHECK(bin_index(1.0, 10) == 9);
  CHECK(bin_index(0.5, 1) == 0);
  for (std::size_t b = 1; b < 20; ++b) {
    for (std::size_t k = 0; k <= b; ++k) {
      const double edge = static_cast<double>(k) / static_cast<double>(b);
      CHECK(bin_index(edge, b) == (k == 0 ? 0 : k - 1));
    }
  }
}

TEST_CASE("expected calibration error") {
  const std::vector<double> p{0.95, 0.95, 0.95, 0.95};
  const std::vector<int> y{1, 1, 1, 0};
  CHECK(ece(p, y) == doctest::Approx(0.2).epsilon(1e-14));

  const std::vector<double> calibrated{0.25, 0.25, 0.25, 0.25, 0.75, 0.75, 0.75, 0.75};
  const std::vector<int> cy{1, 0, 0, 0, 1, 1, 1, 0};
  CHECK(ece(calibrated, cy) == 0.0);

  const auto one = reliability_curve(p, y, 1);
  REQUIRE(one.size() == 1);
  CHECK(one[0].count == 4);
  CHECK(one[0].frequency == 0.75);
  CHECK(one[0].mean_confidence == doctest::Approx(0.95).epsilon(1e-15));

  std::mt19937_64 rng(12);
  for (int k = 0; k < 100; ++k) {
    const auto f = random_fixture(rng, 300);
    const std::size_t bins = 1 + rng() % 20;
    const auto pts = reliability_curve(f.probs, f.labels, bins);
    CHECK(ece_from_points(pts) == ece(f.probs, f.labels, bins));
    CHECK(pts.size() <= bins);
    std::size_t total = 0;
    double max_gap = 0.0;
    for (const auto& pt : pts) {
      total += pt.count;
      max_gap = std::max(max_gap, std::abs(pt.mean_confidence - pt.frequency));
    }
    CHECK(total == f.probs.size());
    CHECK(ece(f.probs, f.labels, bins) <= max_gap + 1e-15);
    CHECK(brier(f.probs, f.labels) >= 0.0);
    CHECK(brier(f.probs, f.labels) <= 1.0);
  }
}

TEST_CASE("calibrated simulation converges") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u;
  const std::size_t n = 100000;
  std::vector<double> p(n);
  std::vector<int> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    p[i] = u(rng);
    y[i] = u(rng) < p[i] ? 1 : 0;
  }
  for (const auto& pt : reliability_curve(p, y, 10)) CHECK(std::abs(pt.mean_confidence - pt.frequency) < 0.02);
}

TEST_CASE("evaluate bundles every metric") {
  const std::vector<double> p{0.9, 0.4, 0.6, 0.1, 0.75};
  const std::vector<int> y{1, 1, 0, 0, 1};
  const auto r = evaluate(p, y, 0.5, 10);
  CHECK(r.confusion.total() == 5);
  CHECK(r.auc == roc_auc(p, y));
  CHECK(r.brier == brier(p, y));
  CHECK(r.ece == ece(p, y, 10));
  CHECK(r.threshold.accuracy == 0.6);
}

TEST_CASE("model selection metrics") {
  const std::vector<double> p{0.9, 0.4, 0.6, 0.1};
  const std::vector<int> y{1, 1, 0, 0};
  CHECK(score_metric(Metric::Accuracy, p, y) == 0.5);
  CHECK(score_metric(Metric::NegBrier, p, y) == -brier(p, y));
  CHECK(score_metric(Metric::NegEce, p, y) == -ece(p, y));
  CHECK(parse_metric("brier") == Metric::NegBrier);
  CHECK(parse_metric("auc") == Metric::Auc);
  CHECK(parse_metric(to_string(Metric::F1)) == Metric::F1);
  CHECK_THROWS_AS(parse_metric("logloss"), ConfigError);
}
