#pragma once

namespace cvd::stats {

// Regularized incomplete beta I_x(a, b). Power series via the continued
// fraction of Lentz, switching to I_{1-x}(b, a) when x > (a+1)/(a+b+2).
double incomplete_beta(double a, double b, double x);

// Regularized lower / upper incomplete gamma. Series for x < a + 1,
// continued fraction otherwise.
double gamma_p(double a, double x);
double gamma_q(double a, double x);

double normal_pdf(double z);
double normal_cdf(double z);

double student_t_cdf(double t, double df);
// P(|T| >= |t|).
double student_t_two_sided(double t, double df);

// P(X >= x) for X ~ chi-square(df).
double chi_square_sf(double x, double df);

// P(X >= f) for X ~ F(d1, d2).
double f_sf(double f, double d1, double d2);

}  // namespace cvd::stats
