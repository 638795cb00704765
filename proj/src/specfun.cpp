#include "spherecap/specfun.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "spherecap/errors.hpp"

namespace spherecap::specfun {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr double kInf = std::numeric_limits<double>::infinity();

// Below this order the Hankel expansion is used past the seam; above it the
// Debye expansion, whose correction terms shrink like (p / v)^k.
constexpr double kDebyeMinOrder = 15.0;

void require_finite_nonnegative(double x, const char* what) {
  if (!(x >= 0.0) || std::isinf(x)) {
    throw DomainError(std::string(what) + ": argument must be finite and >= 0");
  }
}

// Hankel series S_v(x) with I_v(x) ~ e^x / sqrt(2 pi x) * S_v(x).
// Terminates for half-integer v; otherwise summed until the terms stop
// shrinking or fall below machine precision.
double hankel_sum(double v, double x) {
  const double mu = 4.0 * v * v;
  double term = 1.0;
  double sum = 1.0;
  double prev = kInf;
  for (int k = 1; k < 200; ++k) {
    const double odd = 2.0 * k - 1.0;
    term *= -(mu - odd * odd) / (8.0 * k * x);
    const double mag = std::abs(term);
    if (mag == 0.0 || mag > prev) break;
    sum += term;
    if (mag < 0.1 * kEps * std::abs(sum)) break;
    prev = mag;
  }
  return sum;
}

double debye_log_i(double v, double x) {
  const double z = x / v;
  const double root = std::sqrt(1.0 + z * z);
  const double p = 1.0 / root;
  const double eta = root + std::log(z / (1.0 + root));
  const double p2 = p * p;

  const double u1 = p * (3.0 - 5.0 * p2) / 24.0;
  const double u2 = p2 * (81.0 + p2 * (-462.0 + p2 * 385.0)) / 1152.0;
  const double u3 =
      p * p2 *
      (30375.0 + p2 * (-369603.0 + p2 * (765765.0 - p2 * 425425.0))) /
      414720.0;
  const double u4 =
      p2 * p2 *
      (4465125.0 +
       p2 * (-94121676.0 +
             p2 * (349922430.0 + p2 * (-446185740.0 + p2 * 185910725.0)))) /
      39813120.0;
  const double iv = 1.0 / v;
  const double series = 1.0 + iv * (u1 + iv * (u2 + iv * (u3 + iv * u4)));

  return v * eta - 0.5 * std::log(2.0 * std::numbers::pi * v) -
         0.5 * std::log(root) + std::log(series);
}

}  // namespace

namespace detail {

double log_bessel_seam(double v) {
  return std::max(40.0, 10.0 * std::max(1.0, v));
}

double log_bessel_i_over_power_series(double v, double x) {
  // log(I_v(x)/x^v) = -v log 2 + log sum_k (x^2/4)^k / (k! Gamma(v+k+1)).
  // Terms are positive; the running sum is rescaled to avoid overflow.
  const double q = 0.25 * x * x;
  double term = 1.0;
  double sum = 1.0;
  double log_scale = 0.0;
  constexpr double kRescale = 1e280;
  const double log_rescale = std::log(kRescale);
  for (int k = 0; k < 1000000; ++k) {
    term *= q / ((k + 1.0) * (v + k + 1.0));
    sum += term;
    if (sum > kRescale) {
      sum /= kRescale;
      term /= kRescale;
      log_scale += log_rescale;
    }
    if ((k + 1.0) * (v + k + 1.0) > q && term < 0.1 * kEps * sum) break;
  }
  return -v * std::numbers::ln2 - std::lgamma(v + 1.0) + std::log(sum) +
         log_scale;
}

double log_bessel_i_asymptotic(double v, double x) {
  if (v >= kDebyeMinOrder) return debye_log_i(v, x);
  return x - 0.5 * std::log(2.0 * std::numbers::pi * x) +
         std::log(hankel_sum(v, x));
}

double bessel_ratio_continued_fraction(double v, double x) {
  // h_v(x) = x / (2v + x^2 / (2(v+1) + x^2 / (2(v+2) + ...))), evaluated
  // with the modified Lentz algorithm.
  constexpr double kTiny = 1e-300;
  const double a = x * x;
  double f = 2.0 * v;
  double c = f;
  double d = 0.0;
  const int max_iter = 100000 + static_cast<int>(4.0 * x);
  for (int k = 1; k < max_iter; ++k) {
    const double b = 2.0 * (v + k);
    d = b + a * d;
    if (d == 0.0) d = kTiny;
    c = b + a / c;
    if (c == 0.0) c = kTiny;
    d = 1.0 / d;
    const double delta = c * d;
    f *= delta;
    if (std::abs(delta - 1.0) < kEps) return x / f;
  }
  throw NonConvergenceError("bessel_ratio: continued fraction did not converge",
                            x / f, kInf);
}

double bessel_ratio_hankel(double v, double x) {
  return hankel_sum(v, x) / hankel_sum(v - 1.0, x);
}

}  // namespace detail

double bessel_ratio(double v, double x) {
  if (!(v > 0.0) || std::isinf(v)) {
    throw DomainError("bessel_ratio: order must be finite and > 0");
  }
  require_finite_nonnegative(x, "bessel_ratio");
  if (x == 0.0) return 0.0;
  // Both branches can round to 1 + ulp at large x; the ratio itself is < 1.
  const double h = x >= std::max(30.0, v * v) ? detail::bessel_ratio_hankel(v, x)
                                              : detail::bessel_ratio_continued_fraction(v, x);
  return std::min(1.0, h);
}

double bessel_ratio_lower_bound(double v, double x) {
  if (!(v > 0.0)) throw DomainError("bessel_ratio_lower_bound: v must be > 0");
  require_finite_nonnegative(x, "bessel_ratio_lower_bound");
  return x / (v + std::hypot(v, x));
}

double bessel_ratio_upper_bound(double v, double x) {
  if (!(v > 0.5)) throw DomainError("bessel_ratio_upper_bound: v must be > 1/2");
  require_finite_nonnegative(x, "bessel_ratio_upper_bound");
  const double half = v - 0.5;
  return x / (half + std::hypot(half, x));
}

RatioBounds bessel_ratio_bounds(double v, double x) {
  return {bessel_ratio_lower_bound(v, x), bessel_ratio_upper_bound(v, x)};
}

double log_bessel_i_over_power(double v, double x) {
  if (!(v >= -0.5)) throw DomainError("log_bessel_i_over_power: v must be >= -1/2");
  require_finite_nonnegative(x, "log_bessel_i_over_power");
  if (x < detail::log_bessel_seam(v)) {
    return detail::log_bessel_i_over_power_series(v, x);
  }
  return detail::log_bessel_i_asymptotic(v, x) - v * std::log(x);
}

double log_bessel_i_scaled(double v, double x) {
  if (!(v >= -0.5)) throw DomainError("log_bessel_i_scaled: v must be >= -1/2");
  require_finite_nonnegative(x, "log_bessel_i_scaled");
  if (x == 0.0) {
    if (v == 0.0) return 0.0;
    return v > 0.0 ? -kInf : kInf;
  }
  if (x < detail::log_bessel_seam(v)) {
    return detail::log_bessel_i_over_power_series(v, x) + v * std::log(x);
  }
  return detail::log_bessel_i_asymptotic(v, x);
}

double gaussian_tail_q(double x) {
  return 0.5 * std::erfc(x * std::numbers::sqrt2 / 2.0);
}

}  // namespace spherecap::specfun
