#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "doctest.h"
#include "cvdbench/cross_validation.hpp"
#include "cvdbench/gaussian_process.hpp"
#include "cvdbench/search.hpp"
#include "support/frames.hpp"

using namespace cvd;
using namespace cvd::tuning;

namespace {

ObjectiveValue value(double v) { return {v, 0.0}; }

// Counts calls so budgets can be checked from the outside.
struct Counted {
  std::function<double(const Config&)> f;
  std::shared_ptr<std::size_t> calls = std::make_shared<std::size_t>(0);
  ObjectiveValue operator()(const Config& c) const {
    ++*calls;
    return value(f(c));
  }
};

double get(const Config& c, const std::string& name) {
  for (const auto& [k, v] : c) {
    if (k == name) return v;
  }
  throw std::runtime_error("missing " + name);
}

void check_best_so_far(const TrialLog& log) {
  const auto b = log.best_so_far();
  REQUIRE(b.size() == log.trials.size());
  for (std::size_t i = 1; i < b.size(); ++i) CHECK(b[i] >= b[i - 1]);
}

}  // namespace

TEST_CASE("stratified k-fold") {
  SUBCASE("ten rows, five positive") {
    const std::vector<int> y{1, 0, 1, 0, 1, 0, 1, 0, 1, 0};
    const auto folds = stratified_kfold(y, 5, 1);
    REQUIRE(folds.size() == 5);
    for (const auto& f : folds) {
      REQUIRE(f.test.size() == 2);
      CHECK(y[f.test[0]] + y[f.test[1]] == 1);
    }
  }
  SUBCASE("partition, class balance and determinism") {
    std::mt19937_64 rng(3);
    std::vector<int> y(2345);
    for (auto& v : y) v = rng() % 100 < 48 ? 1 : 0;
    const double rate = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
    const auto folds = stratified_kfold(y, 5, 42);
    std::set<std::size_t> seen;
    for (const auto& f : folds) {
      for (auto i : f.test) CHECK(seen.insert(i).second);
      CHECK(f.train.size() + f.test.size() == y.size());
      CHECK(std::abs(preprocess::positive_rate(y, f.test) - rate) < 0.01);
      std::set<std::size_t> train(f.train.begin(), f.train.end());
      for (auto i : f.test) CHECK(train.count(i) == 0);
    }
    CHECK(seen.size() == y.size());
    const auto again = stratified_kfold(y, 5, 42);
    for (std::size_t k = 0; k < 5; ++k) CHECK(again[k].test == folds[k].test);
  }
  SUBCASE("too few members of a class") {
    const std::vector<int> y{1, 1, 0, 0, 0, 0, 0};
    CHECK_THROWS_AS(stratified_kfold(y, 3, 1), DomainError);
  }
}

TEST_CASE("cross-validated score") {
  SUBCASE("separable fixture") {
    Matrix x(40, 2);
    std::vector<int> y(40);
    for (std::size_t r = 0; r < 40; ++r) {
      x(r, 0) = static_cast<double>(r >= 20 ? r + 20 : r);  // a margin between the classes
      x(r, 1) = static_cast<double>((r * 7) % 5);
      y[r] = r >= 20 ? 1 : 0;
    }
    const auto frame = testing::make_frame(x, y);
    const auto folds = stratified_kfold(frame.target, 5, 9);
    const auto s = cv_score({learners::LearnerKind::Cart, {{"min_samples_leaf", 1}}, 0}, frame, folds);
    CHECK(s.mean == 1.0);
    CHECK(s.sd == 0.0);
  }
  SUBCASE("mean of fold scores and a constant predictor") {
    const auto c = testing::cohort_frames(1200, 4);
    const auto folds = stratified_kfold(c.train.target, 5, 2);
    const double n_train = static_cast<double>(folds[0].train.size());
    const auto s = cv_score({learners::LearnerKind::Knn, {{"k", n_train + 10}}, 0}, c.train, folds);
    REQUIRE(s.fold_scores.size() == 5);
    double sum = 0.0;
    for (double v : s.fold_scores) sum += v;
    CHECK(s.mean == sum / 5.0);
    const double rate = preprocess::positive_rate(c.train.target, iota_indices(c.train.rows()));
    CHECK(s.mean == doctest::Approx(std::max(rate, 1 - rate)).epsilon(0.01));
    CHECK(s.sd < 0.01);
  }
  SUBCASE("a failing fold is named") {
    Matrix x(10, 1, 1.0);
    const auto frame = testing::make_frame(x, {1, 0, 1, 0, 1, 0, 1, 0, 1, 0});
    std::vector<preprocess::SplitPair> folds(1);
    folds[0].train = {0, 2, 4};  // a single class
    folds[0].test = {1, 3};
    try {
      cv_score({learners::LearnerKind::Logistic, {}, 0}, frame, folds);
      FAIL("expected failure");
    } catch (const Error& e) {
      CHECK(std::string(e.what()).find("fold 0") != std::string::npos);
    }
  }
}

TEST_CASE("search space") {
  SearchSpace space{{Axis::continuous("lr", 0.01, 0.3, true), Axis::integer("depth", 3, 10),
                     Axis::integer("rounds", 50, 1000, true), Axis::categorical("mode", {0, 1, 2})}};
  space.validate();
  std::mt19937_64 rng(5);
  for (int k = 0; k < 10000; ++k) {
    const auto c = space.sample(rng);
    CHECK(get(c, "lr") >= 0.01);
    CHECK(get(c, "lr") <= 0.3);
    const double d = get(c, "depth");
    CHECK(d == std::round(d));
    CHECK(d >= 3);
    CHECK(d <= 10);
    const double r = get(c, "rounds");
    CHECK(r == std::round(r));
    CHECK(r >= 50);
    CHECK(r <= 1000);
    const double m = get(c, "mode");
    CHECK((m == 0 || m == 1 || m == 2));
  }
  SearchSpace bad{{Axis::continuous("a", 2, 1), Axis::categorical("b", {})}};
  try {
    bad.validate();
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("a") != std::string::npos);
    CHECK(msg.find("b") != std::string::npos);
  }
  CHECK(format_config({{"a", 1}, {"b", 0.5}}) == "a=1;b=0.5");
}

TEST_CASE("grid search") {
  SearchSpace space{{Axis::integer("a", 1, 3), Axis::continuous("b", 0, 1, false, {0.25, 0.75})}};
  Counted obj{[](const Config& c) { return -std::abs(get(c, "a") - 2) - std::abs(get(c, "b") - 0.7); }};
  const auto log = grid_search(space, obj);
  CHECK(log.trials.size() == 6);
  CHECK(*obj.calls == 6);
  CHECK(get(log.trials[0].config, "a") == 1);
  CHECK(get(log.trials[0].config, "b") == 0.25);
  CHECK(get(log.trials[1].config, "b") == 0.75);
  CHECK(get(log.best().config, "a") == 2);
  CHECK(get(log.best().config, "b") == 0.75);
  check_best_so_far(log);

  SUBCASE("ties go to the earliest trial") {
    const auto flat = grid_search(space, [](const Config&) { return value(1.0); });
    CHECK(*flat.best_index() == 0);
  }
  SUBCASE("single point") {
    SearchSpace one{{Axis::continuous("x", 0, 1, false, {0.4})}};
    const auto l = grid_search(one, [](const Config& c) { return value(get(c, "x")); });
    REQUIRE(l.trials.size() == 1);
    CHECK(get(l.best().config, "x") == 0.4);
  }
  SUBCASE("oversized grids are refused with the count") {
    SearchSpace big{{Axis::integer("a", 1, 100), Axis::integer("b", 1, 100)}};
    try {
      grid_search(big, [](const Config&) { return value(0); }, 5000);
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find("10000") != std::string::npos);
    }
  }
  SUBCASE("failed trials are recorded") {
    const auto l = grid_search(space, [](const Config& c) -> ObjectiveValue {
      if (get(c, "a") == 2) throw std::runtime_error("boom");
      return value(get(c, "b"));
    });
    std::size_t failed = 0;
    for (const auto& t : l.trials) failed += t.failed ? 1 : 0;
    CHECK(failed == 2);
    CHECK_FALSE(l.best().failed);
    check_best_so_far(l);
  }
}

TEST_CASE("random search") {
  SearchSpace space{{Axis::integer("x", 0, 999)}};
  const auto one = random_search(space, 1, [](const Config&) { return value(3); }, 1);
  REQUIRE(one.trials.size() == 1);
  CHECK(*one.best_index() == 0);

  // optimum at 417; the top 5% of the domain are the 50 closest values
  int hits = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Counted obj{[](const Config& c) { return -std::abs(get(c, "x") - 417.0); }};
    const auto log = random_search(space, 100, obj, seed);
    CHECK(*obj.calls == 100);
    check_best_so_far(log);
    if (std::abs(get(log.best().config, "x") - 417.0) <= 25.0) ++hits;
  }
  CHECK(hits >= 19);

  const auto a = random_search(space, 30, [](const Config& c) { return value(get(c, "x")); }, 8);
  const auto b = random_search(space, 30, [](const Config& c) { return value(get(c, "x")); }, 8);
  for (std::size_t i = 0; i < 30; ++i) CHECK(a.trials[i].config == b.trials[i].config);
}

TEST_CASE("Gaussian process") {
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> u;
  for (int rep = 0; rep < 10; ++rep) {
    Matrix x(5, 2);
    std::vector<double> y(5);
    for (std::size_t i = 0; i < 5; ++i) {
      x(i, 0) = u(rng);
      x(i, 1) = u(rng);
      y[i] = std::sin(6 * x(i, 0)) + x(i, 1);
    }
    const std::vector<double> grid{0.05, 0.1, 0.2, 0.4, 0.8};
    const auto gp = fit_gp(x, y, grid);
    for (std::size_t i = 0; i < 5; ++i) {
      const auto p = gp.predict(x.row(i));
      CHECK(std::abs(p.mean - y[i]) < 1e-4);
      CHECK(p.sd >= 0.0);
    }
    double best_lml = -INFINITY;
    for (double l : grid) best_lml = std::max(best_lml, GaussianProcess(x, y, l).log_marginal_likelihood());
    CHECK(gp.log_marginal_likelihood() == best_lml);
  }
  for (double m : {-2.0, 0.0, 0.5, 3.0}) {
    for (double s : {0.0, 1e-9, 0.1, 2.0}) CHECK(expected_improvement(m, s, 0.4) >= 0.0);
  }
  CHECK(expected_improvement(1.0, 0.0, 0.4) == doctest::Approx(0.6));
  CHECK(expected_improvement(0.0, 0.0, 0.4) == 0.0);
}

TEST_CASE("Bayesian optimisation") {
  SearchSpace space{{Axis::continuous("x", 0, 1)}};
  int hits = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Counted obj{[](const Config& c) { return -std::pow(get(c, "x") - 0.3, 2); }};
    const auto log = bayes_opt(space, 20, obj, seed);
    CHECK(*obj.calls == 20);
    CHECK(log.trials.size() == 20);
    check_best_so_far(log);
    if (std::abs(get(log.best().config, "x") - 0.3) < 0.05) ++hits;
  }
  CHECK(hits >= 9);

  SUBCASE("non-finite values are failures and excluded") {
    const auto log = bayes_opt(space, 10, [](const Config& c) {
      return value(get(c, "x") > 0.8 ? NAN : get(c, "x"));
    }, 3);
    CHECK(log.trials.size() == 10);
    CHECK(get(log.best().config, "x") <= 0.8);
  }
  SUBCASE("budget must exceed the initial design") {
    CHECK_THROWS_AS(bayes_opt(space, 5, [](const Config&) { return value(0); }, 1), ConfigError);
  }
  SUBCASE("identical seeds give identical logs") {
    auto f = [](const Config& c) { return value(std::sin(9 * get(c, "x"))); };
    const auto a = bayes_opt(space, 12, f, 77);
    const auto b = bayes_opt(space, 12, f, 77);
    for (std::size_t i = 0; i < a.trials.size(); ++i) {
      CHECK(a.trials[i].config == b.trials[i].config);
      CHECK(a.trials[i].mean == b.trials[i].mean);
    }
  }
}

TEST_CASE("particle swarm") {
  SearchSpace sphere;
  for (int d = 0; d < 5; ++d) sphere.axes.push_back(Axis::continuous("x" + std::to_string(d), -5, 5));
  auto sphere_value = [](const Config& c) {
    double s = 0;
    for (const auto& [k, v] : c) s += v * v;
    return -s;
  };

  int hits = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    PsoOptions opt;
    opt.swarm_size = 20;
    opt.iterations = 200;
    Counted obj{sphere_value};
    double last_global = -INFINITY;
    bool in_bounds = true, monotone = true, global_is_max = true;
    const auto log = pso_search(sphere, opt, obj, seed, [&](const SwarmState& s) {
      for (const auto& p : s.position) {
        for (double v : p) in_bounds = in_bounds && v >= -5 && v <= 5;
      }
      monotone = monotone && s.global_best_score >= last_global;
      last_global = s.global_best_score;
      global_is_max = global_is_max &&
                      s.global_best_score == *std::max_element(s.best_score.begin(), s.best_score.end());
    });
    CHECK(*obj.calls == 4000);
    CHECK(log.trials.size() == 4000);
    CHECK(in_bounds);
    CHECK(monotone);
    CHECK(global_is_max);
    check_best_so_far(log);
    if (-log.best().mean < 1e-3) ++hits;
  }
  CHECK(hits >= 9);

  SUBCASE("schedules are linear in the iteration") {
    PsoOptions opt;
    opt.swarm_size = 3;
    opt.iterations = 11;
    std::vector<double> w, c1, c2;
    pso_search(sphere, opt, Counted{sphere_value}, 4, [&](const SwarmState& s) {
      w.push_back(s.w);
      c1.push_back(s.c1);
      c2.push_back(s.c2);
    });
    REQUIRE(w.size() == 11);
    CHECK(w.front() == doctest::Approx(0.9));
    CHECK(w.back() == doctest::Approx(0.4));
    CHECK(c1.front() == doctest::Approx(2.5));
    CHECK(c1.back() == doctest::Approx(0.5));
    CHECK(c2.back() == doctest::Approx(2.5));
    CHECK(w[5] == doctest::Approx(0.65));
  }
  SUBCASE("without attraction the particle decays toward where it stands") {
    PsoOptions opt;
    opt.swarm_size = 1;
    opt.iterations = 60;
    opt.w_start = opt.w_end = 0.5;
    opt.c1_start = opt.c1_end = 0.0;
    opt.c2_start = opt.c2_end = 0.0;
    opt.velocity_clamp = 0.01;  // keeps the particle well inside the bounds
    std::vector<std::vector<double>> pos, vel;
    pso_search(sphere, opt, Counted{sphere_value}, 6, [&](const SwarmState& s) {
      pos.push_back(s.position[0]);
      vel.push_back(s.velocity[0]);
    });
    // x_t = x_0 + v_0 (w + ... + w^t), so the step to the limit halves each iteration
    const auto& x0 = pos[0];
    const auto& v0 = vel[0];
    for (std::size_t d = 0; d < 5; ++d) {
      const double limit = x0[d] + v0[d] * 0.5 / (1 - 0.5);
      double gap = std::abs(pos[1][d] - limit);
      for (std::size_t t = 2; t < 20; ++t) {
        const double next = std::abs(pos[t][d] - limit);
        CHECK(next == doctest::Approx(0.5 * gap).epsilon(1e-6).scale(1e-12));
        gap = next;
      }
      CHECK(std::abs(pos.back()[d] - limit) < 1e-12);
    }
  }
  SUBCASE("integer axes are rounded at evaluation") {
    SearchSpace mixed{{Axis::integer("n", 1, 10), Axis::continuous("lr", 0.01, 1, true)}};
    PsoOptions opt;
    opt.swarm_size = 4;
    opt.iterations = 5;
    const auto log = pso_search(mixed, opt, [](const Config& c) { return value(-get(c, "n")); }, 2);
    for (const auto& t : log.trials) {
      const double n = get(t.config, "n");
      CHECK(n == std::round(n));
      CHECK(get(t.config, "lr") >= 0.01);
    }
  }
}

TEST_CASE("trial log CSV") {
  SearchSpace space{{Axis::integer("a", 1, 2)}};
  const auto log = grid_search(space, [](const Config& c) { return ObjectiveValue{get(c, "a") / 4, 0.125}; });
  std::ostringstream out;
  log.write_csv(out);
  const std::string text = out.str();
  CHECK(text.rfind("trial,config,mean,sd,seconds,status\n0,a=1,0.25,0.125,", 0) == 0);
  CHECK(text.find("\n1,a=2,0.5,0.125,") != std::string::npos);
}
