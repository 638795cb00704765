#pragma once

// Scalar special functions used by the spherical-input channel formulas:
// the modified Bessel ratio h_v(x) = I_v(x) / I_{v-1}(x), log I_v(x), and
// the standard Gaussian tail Q(x).
//
// All functions are pure and thread-safe.

namespace spherecap::specfun {

/// h_v(x) = I_v(x) / I_{v-1}(x) for v > 0, x >= 0.
///
/// Evaluated directly as a ratio (Gauss continued fraction, or the Hankel
/// large-argument series when x >= max(30, v^2)), so it is finite and
/// accurate for arguments far beyond the overflow point of I_v itself.
/// Throws DomainError for x < 0 or v <= 0.
double bessel_ratio(double v, double x);

/// Bracket for h_v(x): lower = x / (v + sqrt(v^2 + x^2)) (v > 0),
/// upper = x / ((2v-1)/2 + sqrt((2v-1)^2/4 + x^2)) (v > 1/2).
struct RatioBounds {
  double lower;
  double upper;
};

double bessel_ratio_lower_bound(double v, double x);
/// Throws DomainError for v <= 1/2.
double bessel_ratio_upper_bound(double v, double x);
/// Throws DomainError for v <= 1/2 (the upper bound is undefined there).
RatioBounds bessel_ratio_bounds(double v, double x);

/// log I_v(x) for v >= -1/2, x >= 0, computed through exponentially scaled
/// forms so it stays finite for x up to 1e8 and beyond.
///
/// Power series below the seam max(40, 10 max(1, v)); above it the Debye
/// uniform expansion (v >= 15) or the Hankel expansion (v < 15).
/// At x = 0 returns 0 for v = 0, -inf for v > 0 and +inf for v < 0.
double log_bessel_i_scaled(double v, double x);

/// log(I_v(x) / x^v), finite at x = 0 where it equals -v log 2 - lgamma(v+1).
double log_bessel_i_over_power(double v, double x);

/// Standard Gaussian upper tail Q(x) = P(N(0,1) > x).
double gaussian_tail_q(double x);

namespace detail {

/// Argument where log_bessel_i_scaled switches from series to asymptotics.
double log_bessel_seam(double v);
/// Series branch of log(I_v(x) / x^v); valid for any x >= 0 but slow for large x.
double log_bessel_i_over_power_series(double v, double x);
/// Asymptotic branch of log I_v(x); accurate for x beyond the seam.
double log_bessel_i_asymptotic(double v, double x);

double bessel_ratio_continued_fraction(double v, double x);
double bessel_ratio_hankel(double v, double x);

}  // namespace detail

}  // namespace spherecap::specfun
