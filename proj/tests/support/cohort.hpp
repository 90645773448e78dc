#pragma once

// Synthetic cohort shaped like the public cardiovascular file: same columns,
// semicolon delimited, age in days, a logistic outcome driven mostly by
// age, systolic pressure and cholesterol, and a small share of implausible rows.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <string>

namespace cvd::testing {

struct CohortOptions {
  std::size_t rows = 1000;
  std::uint64_t seed = 1;
  double implausible_fraction = 0.02;  // rows that the default cleaning rules drop
  double missing_fraction = 0.0;       // empty feature cells
};

inline std::string synthetic_cohort_csv(const CohortOptions& opt) {
  std::mt19937_64 rng(opt.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  auto bernoulli = [&](double p) { return unif(rng) < p ? 1 : 0; };
  auto cell = [&](const std::string& v) { return unif(rng) < opt.missing_fraction ? std::string() : v; };

  std::ostringstream out;
  out << "id;age;gender;height;weight;ap_hi;ap_lo;cholesterol;gluc;smoke;alco;active;cardio\n";
  for (std::size_t i = 0; i < opt.rows; ++i) {
    const double age_years = std::clamp(53.0 + 6.8 * normal(rng), 30.0, 65.0);
    const long age_days = std::lround(age_years * 365.25);
    const int gender = bernoulli(0.35) ? 2 : 1;
    long height = std::lround((gender == 2 ? 170.0 : 161.0) + 7.5 * normal(rng));
    long weight = std::lround(74.0 + 0.5 * (height - 164) + 13.0 * normal(rng));
    height = std::clamp(height, 120L, 210L);
    weight = std::clamp(weight, 40L, 180L);
    const double bmi = weight / std::pow(height / 100.0, 2);
    const double u = unif(rng);
    const int chol = u < 0.75 ? 1 : (u < 0.88 ? 2 : 3);
    const double g = unif(rng);
    const int gluc = g < 0.85 ? 1 : (g < 0.92 ? 2 : 3);
    const int smoke = bernoulli(gender == 2 ? 0.2 : 0.02);
    const int alco = bernoulli(0.05);
    const int active = bernoulli(0.8);
    long ap_hi = std::lround(118.0 + 0.4 * (age_years - 53.0) + 0.8 * (bmi - 27.0) + 4.0 * (chol - 1) + 14.0 * normal(rng));
    ap_hi = std::clamp(ap_hi, 90L, 200L);
    long ap_lo = std::lround(0.55 * ap_hi + 15.0 + 6.0 * normal(rng));
    ap_lo = std::clamp(ap_lo, 50L, ap_hi - 10);

    const double logit = -0.35 + 0.055 * (age_years - 53.0) + 0.065 * (ap_hi - 127.0) + 0.6 * (chol - 1) +
                         0.15 * (gluc - 1) + 0.03 * (bmi - 27.0) - 0.2 * active - 0.1 * smoke;
    const int cardio = bernoulli(1.0 / (1.0 + std::exp(-logit)));

    if (unif(rng) < opt.implausible_fraction) {
      // the kinds of entry errors found in the public file
      switch (rng() % 3) {
        case 0: std::swap(ap_hi, ap_lo); break;
        case 1: ap_hi *= 10; break;
        default: height = 55; break;
      }
    }
    out << (i + 1) << ';' << cell(std::to_string(age_days)) << ';' << gender << ';' << cell(std::to_string(height))
        << ';' << cell(std::to_string(weight)) << ';' << cell(std::to_string(ap_hi)) << ';'
        << cell(std::to_string(ap_lo)) << ';' << cell(std::to_string(chol)) << ';' << cell(std::to_string(gluc))
        << ';' << smoke << ';' << alco << ';' << active << ';' << cardio << '\n';
  }
  return out.str();
}

}  // namespace cvd::testing
