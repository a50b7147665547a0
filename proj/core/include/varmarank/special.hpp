#pragma once

namespace varmarank {

// Regularized incomplete gamma functions for a > 0, x >= 0.
double gamma_p(double a, double x);
double gamma_q(double a, double x);

/// x such that gamma_p(a, x) = p, for p in [0, 1). Bracketed Newton with a
/// bisection fallback; relative tolerance 1e-12.
double gamma_p_inverse(double a, double p);

double chi_square_cdf(double x, double df);

/// Upper tail P(X > x) for X ~ chi-square(df).
double chi_square_sf(double x, double df);

double chi_square_quantile(double p, double df);

}  // namespace varmarank
