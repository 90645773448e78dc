#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "doctest.h"
#include "cvdbench/preprocess.hpp"
#include "cvdbench/special_functions.hpp"
#include "cvdbench/stats.hpp"
#include "support/cohort.hpp"
#include "support/oracles.hpp"

using namespace cvd;
using namespace cvd::stats;

TEST_CASE("Welch t test") {
  SUBCASE("identical groups") {
    const std::vector<double> a{1, 4, 2, 8, 5};
    const auto r = welch_t_test(a, a);
    CHECK(r.statistic == 0.0);
    CHECK(r.p_value == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("shifted groups") {
    // mean difference -1, both variances 2.5, n = 5: se = 1, df = 8
    const std::vector<double> a{1, 2, 3, 4, 5};
    const std::vector<double> b{2, 3, 4, 5, 6};
    const auto r = welch_t_test(a, b);
    CHECK(r.statistic == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(r.df == doctest::Approx(8.0).epsilon(1e-12));
    CHECK(r.p_value == doctest::Approx(0.3465935071).epsilon(1e-8));
  }
  SUBCASE("unequal variances, frozen value") {
    const std::vector<double> a{12.1, 14.3, 11.8, 15.2, 13.0, 12.7};
    const std::vector<double> b{9.2, 16.8, 5.1, 12.2};
    const auto r = welch_t_test(a, b);
    CHECK(r.statistic == doctest::Approx(0.9341928584).epsilon(1e-8));
    CHECK(r.df == doctest::Approx(3.2872749273).epsilon(1e-8));
    CHECK(r.p_value == doctest::Approx(0.4136064656).epsilon(1e-7));
  }
  SUBCASE("swapping groups negates t and keeps p") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> nd;
    for (int k = 0; k < 20; ++k) {
      std::vector<double> a(5 + k), b(9 + k);
      for (auto& v : a) v = nd(rng);
      for (auto& v : b) v = 0.5 + 2 * nd(rng);
      const auto ab = welch_t_test(a, b);
      const auto ba = welch_t_test(b, a);
      CHECK(ab.statistic == -ba.statistic);
      CHECK(ab.p_value == ba.p_value);
      CHECK(ab.p_value >= 0.0);
      CHECK(ab.p_value <= 1.0);
      CHECK(ab.df > 0.0);
    }
  }
  SUBCASE("degenerate input") {
    const std::vector<double> one{1.0};
    const std::vector<double> flat{2.0, 2.0, 2.0};
    const std::vector<double> ok{1.0, 2.0, 3.0};
    CHECK_THROWS_AS(welch_t_test(one, ok), DomainError);
    CHECK_THROWS_AS(welch_t_test(flat, ok), DomainError);
  }
}

TEST_CASE("chi-square independence") {
  const auto even = chi_square_independence({{10, 10}, {10, 10}});
  CHECK(even.statistic == 0.0);
  CHECK(even.p_value == doctest::Approx(1.0));

  const auto r = chi_square_independence({{20, 10}, {10, 20}});
  CHECK(r.statistic == doctest::Approx(20.0 / 3.0).epsilon(1e-12));
  CHECK(r.df == 1.0);
  CHECK(r.p_value == doctest::Approx(0.0098232748).epsilon(1e-7));

  const auto r3 = chi_square_independence({{12, 5, 9}, {7, 11, 3}});
  CHECK(r3.df == 2.0);
  CHECK(r3.statistic == doctest::Approx(6.1029436572).epsilon(1e-8));
  CHECK(r3.p_value == doctest::Approx(0.0472892714).epsilon(1e-7));

  CHECK_THROWS_AS(chi_square_independence({{0, 0}, {3, 4}}), DomainError);
  CHECK_THROWS_AS(chi_square_independence({{1, 2}}), DomainError);

  // a larger statistic never has a larger p
  double last = 1.0;
  for (double x = 0.0; x < 40.0; x += 0.5) {
    const double p = chi_square_sf(x, 3);
    CHECK(p <= last);
    last = p;
  }
}

TEST_CASE("one-way ANOVA") {
  const auto r = one_way_anova({{1, 2, 3}, {4, 5, 6}, {7, 8, 9}});
  CHECK(r.statistic == doctest::Approx(27.0).epsilon(1e-12));
  CHECK(r.df == 2.0);
  CHECK(r.df2 == 6.0);
  CHECK(r.p_value == doctest::Approx(0.001).epsilon(1e-9));

  const auto same = one_way_anova({{1, 2, 3}, {3, 2, 1}, {2, 1, 3}});
  CHECK(same.statistic == 0.0);
  CHECK(same.p_value == doctest::Approx(1.0));

  CHECK_THROWS_AS(one_way_anova({{1, 2, 3}}), DomainError);
  CHECK_THROWS_AS(one_way_anova({{1, 1}, {2, 2}}), DomainError);
}

TEST_CASE("distribution tails agree with numerical integration") {
  for (double df : {1.0, 2.5, 8.0, 30.0, 200.0}) {
    for (double t : {0.05, 0.7, 1.5, 3.0, 8.0}) {
      CHECK(std::abs(student_t_two_sided(t, df) - testing::t_two_sided_oracle(t, df)) < 1e-6);
    }
  }
  for (double df : {1.0, 2.0, 5.0, 12.0}) {
    for (double x : {0.2, 1.0, 4.0, 15.0}) {
      CHECK(std::abs(chi_square_sf(x, df) - testing::chi_square_sf_oracle(x, df)) < 1e-6);
    }
  }
  CHECK(std::abs(f_sf(2.5, 3, 17) - testing::f_sf_oracle(2.5, 3, 17)) < 1e-6);
  CHECK(normal_cdf(0.0) == 0.5);
  CHECK(normal_cdf(1.959963984540054) == doctest::Approx(0.975).epsilon(1e-12));
}

TEST_CASE("Pearson correlation matrix") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> nd;
  std::vector<double> x(200), y(200), z(200, 4.0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = nd(rng);
    y[i] = 0.6 * x[i] + nd(rng);
  }
  std::vector<double> neg(x.size());
  std::transform(x.begin(), x.end(), neg.begin(), [](double v) { return -v; });
  const auto m = pearson_matrix({x, y, neg, z}, {"x", "y", "neg", "z"});
  CHECK(m.values(0, 0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(m.values(0, 2) == doctest::Approx(-1.0).epsilon(1e-15));
  CHECK(m.values(0, 1) == m.values(1, 0));
  CHECK(m.values(0, 1) > 0.3);
  CHECK_FALSE(m.defined[3]);
  CHECK(std::isnan(m.values(3, 0)));
  CHECK(std::isnan(m.values(3, 3)));

  // invariant to positive affine maps
  std::vector<double> x2(x.size()), y2(y.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    x2[i] = 3.5 * x[i] - 7.0;
    y2[i] = 0.01 * y[i] + 100.0;
  }
  const auto m2 = pearson_matrix({x2, y2}, {"x", "y"});
  CHECK(std::abs(m2.values(0, 1) - m.values(0, 1)) < 1e-10);
}

TEST_CASE("univariate odds ratios") {
  std::mt19937_64 rng(21);
  std::normal_distribution<double> nd;
  std::uniform_real_distribution<double> u;
  const std::size_t n = 20000;
  std::vector<double> x(n);
  std::vector<int> y(n), noise(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = 50 + 7 * nd(rng);
    const double p = 1 / (1 + std::exp(-(-3.0 + 0.06 * x[i])));
    y[i] = u(rng) < p ? 1 : 0;
    noise[i] = u(rng) < 0.5 ? 1 : 0;
  }
  const auto est = univariate_odds_ratio(x, y, "age");
  CHECK(est.feature == "age");
  CHECK_FALSE(est.separated);
  CHECK(est.odds_ratio == doctest::Approx(std::exp(est.beta)).epsilon(1e-14));
  CHECK(est.beta == doctest::Approx(0.06).epsilon(0.15));
  CHECK(est.intercept == doctest::Approx(-3.0).epsilon(0.2));

  const auto none = univariate_odds_ratio(x, noise);
  CHECK(std::abs(none.odds_ratio - 1.0) < 0.01);

  SUBCASE("perfect separation is flagged") {
    std::vector<double> v{1, 2, 3, 4, 5, 6, 7, 8};
    std::vector<int> t{0, 0, 0, 0, 1, 1, 1, 1};
    const auto sep = univariate_odds_ratio(v, t);
    CHECK(sep.separated);
    CHECK_FALSE(sep.diagnostic.empty());
  }
  SUBCASE("joint fit recovers both slopes") {
    std::vector<double> a(n), b(n);
    std::vector<int> t(n);
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = 130 + 15 * nd(rng);
      b[i] = 0.5 * a[i] + 20 + 7 * nd(rng);
      const double p = 1 / (1 + std::exp(-(-9.0 + 0.065 * a[i] + 0.015 * b[i])));
      t[i] = u(rng) < p ? 1 : 0;
    }
    const auto fit = odds_ratios({a, b}, {"ap_hi", "ap_lo"}, t);
    REQUIRE(fit.size() == 2);
    CHECK(fit[0].feature == "ap_hi");
    CHECK(fit[0].beta == doctest::Approx(0.065).epsilon(0.15));
    CHECK(fit[1].beta == doctest::Approx(0.015).epsilon(0.6));
    CHECK(fit[0].intercept == fit[1].intercept);
  }
}

TEST_CASE("summary statistics") {
  const std::vector<double> v{4, 1, 3, 2};
  CHECK(mean(v) == 2.5);
  CHECK(median(v) == 2.5);
  CHECK(variance(v) == doctest::Approx(5.0 / 3.0));
}

TEST_CASE("battery on a synthetic cohort") {
  std::istringstream in(testing::synthetic_cohort_csv({.rows = 6000, .seed = 2}));
  const auto raw = ingest::parse_csv(in);
  const auto table =
      preprocess::to_clinical_table(preprocess::apply_cleaning(raw, preprocess::CleaningRules{}).retained);
  const auto report = run_battery(table);

  auto find_test = [&](const std::string& test, const std::string& var) -> const BatteryRow* {
    for (const auto& r : report.tests) {
      if (r.test == test && r.variable == var) return &r;
    }
    return nullptr;
  };
  const auto* weight = find_test("welch_t", "weight");
  REQUIRE(weight != nullptr);
  CHECK(weight->result.p_value < 0.001);
  const auto* chol = find_test("chi_square", "cholesterol");
  REQUIRE(chol != nullptr);
  CHECK(chol->result.df == 2.0);
  CHECK(chol->result.p_value < 0.001);
  const auto* anova = find_test("anova", "ap_hi~cholesterol");
  REQUIRE(anova != nullptr);
  CHECK(anova->result.df == 2.0);

  for (const auto& r : report.tests) {
    CHECK(r.result.p_value >= 0.0);
    CHECK(r.result.p_value <= 1.0);
  }
  for (const auto& e : report.univariate) CHECK(e.odds_ratio > 0.0);
  REQUIRE(report.blood_pressure.size() == 2);

  const auto& c = report.correlation;
  REQUIRE(c.values.rows() == c.labels.size());
  CHECK(c.labels.back() == "cardio");
  for (std::size_t i = 0; i < c.labels.size(); ++i) {
    CHECK(c.values(i, i) == doctest::Approx(1.0).epsilon(1e-12));
    for (std::size_t j = 0; j < c.labels.size(); ++j) {
      CHECK(c.values(i, j) == c.values(j, i));
      CHECK(std::abs(c.values(i, j)) <= 1.0 + 1e-12);
    }
  }
}
