#include "spherecap/channel.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "spherecap/errors.hpp"
#include "spherecap/specfun.hpp"

namespace spherecap {

using specfun::bessel_ratio;
using specfun::log_bessel_i_over_power;

ChannelSpec::ChannelSpec(int n, double radius) : n_(n), radius_(radius) {
  if (n < 1) throw DomainError("ChannelSpec: n must be >= 1");
  if (!(radius > 0.0) || std::isinf(radius)) {
    throw DomainError("ChannelSpec: radius must be finite and > 0");
  }
}

SnrFraction::SnrFraction(double gamma) : gamma_(gamma) {
  if (!(gamma >= 0.0 && gamma <= 1.0)) {
    throw DomainError("SnrFraction: gamma must lie in [0, 1]");
  }
}

namespace {

void require_norm(double value, const char* what) {
  if (!(value >= 0.0) || std::isinf(value)) {
    throw DomainError(std::string(what) + ": norm must be finite and >= 0");
  }
}

// R^2 E[h^2_{n/2}(sqrt(gamma) R sqrt(V))] with V ~ chi2'(n, noncentrality).
double posterior_energy(const ChannelSpec& spec, double gamma,
                        double noncentrality, const ExpectationEngine& engine) {
  const double r2 = spec.radius() * spec.radius();
  if (gamma == 0.0) return 0.0;
  const double scale = std::sqrt(gamma) * spec.radius();
  const double order = spec.ratio_order();
  const double mean_h2 = engine.ncx2(
      NoncentralChiSquare(spec.n(), noncentrality), [=](double v) {
        const double h = bessel_ratio(order, scale * std::sqrt(v));
        return h * h;
      });
  return r2 * mean_h2;
}

}  // namespace

double log_output_pdf(const ChannelSpec& spec, double ynorm) {
  require_norm(ynorm, "log_output_pdf");
  const double n = spec.n();
  const double radius = spec.radius();
  return std::lgamma(0.5 * n) - 0.5 * (radius * radius + ynorm * ynorm) -
         0.5 * n * std::log(std::numbers::pi) - std::numbers::ln2 +
         log_bessel_i_over_power(0.5 * n - 1.0, ynorm * radius);
}

double output_pdf(const ChannelSpec& spec, double ynorm) {
  return std::exp(log_output_pdf(spec, ynorm));
}

double conditional_mean_magnitude(const ChannelSpec& spec, double ynorm) {
  require_norm(ynorm, "conditional_mean_magnitude");
  return spec.radius() * bessel_ratio(spec.ratio_order(), spec.radius() * ynorm);
}

double mmse_at_snr(const ChannelSpec& spec, SnrFraction gamma,
                   const ExpectationEngine& engine) {
  const double g = gamma.value();
  const double r2 = spec.radius() * spec.radius();
  return r2 - posterior_energy(spec, g, g * r2, engine);
}

double mmse_gaussian_reference(int n, double radius) {
  if (n < 1) throw DomainError("mmse_gaussian_reference: n must be >= 1");
  if (!(radius >= 0.0)) throw DomainError("mmse_gaussian_reference: radius must be >= 0");
  const double per_dim = radius * radius / n;
  return n * per_dim / (1.0 + per_dim);
}

double posterior_energy_at_zero(const ChannelSpec& spec, SnrFraction gamma,
                                const ExpectationEngine& engine) {
  return posterior_energy(spec, gamma.value(), 0.0, engine);
}

double mutual_information(const ChannelSpec& spec, const ExpectationEngine& engine) {
  const double radius = spec.radius();
  const double order = 0.5 * spec.n() - 1.0;
  const double mean_log = engine.ncx2(
      NoncentralChiSquare(spec.n(), radius * radius), [=](double v) {
        return log_bessel_i_over_power(order, radius * std::sqrt(v));
      });
  return radius * radius + (1.0 - 0.5 * spec.n()) * std::numbers::ln2 -
         std::lgamma(0.5 * spec.n()) - mean_log;
}

double mutual_info_via_immse(const ChannelSpec& spec,
                             const ExpectationEngine& engine) {
  return 0.5 * engine.integrate(
                   [&](double g) { return mmse_at_snr(spec, SnrFraction(g), engine); },
                   0.0, 1.0);
}

double info_density(const ChannelSpec& spec, double xnorm,
                    const ExpectationEngine& engine) {
  require_norm(xnorm, "info_density");
  if (xnorm > spec.radius() * (1.0 + 1e-12)) {
    throw DomainError("info_density: xnorm must lie in [0, R]");
  }
  const double n = spec.n();
  const double mean_log_pdf = engine.ncx2(
      NoncentralChiSquare(spec.n(), xnorm * xnorm),
      [&](double v) { return log_output_pdf(spec, std::sqrt(v)); });
  return -0.5 * n * std::log(2.0 * std::numbers::pi * std::numbers::e) - mean_log_pdf;
}

InfoDensityProfile info_density_profile(const ChannelSpec& spec, int grid_points,
                                        const ExpectationEngine& engine) {
  if (grid_points < 2) throw DomainError("info_density_profile: need >= 2 points");
  InfoDensityProfile profile;
  profile.xnorm_grid.resize(grid_points);
  profile.values.resize(grid_points);
  for (int i = 0; i < grid_points; ++i) {
    const double x = i == grid_points - 1
                         ? spec.radius()
                         : spec.radius() * static_cast<double>(i) / (grid_points - 1);
    profile.xnorm_grid[i] = x;
    profile.values[i] = info_density(spec, x, engine);
  }
  return profile;
}

double g_prime(const ChannelSpec& spec, double x1, const ExpectationEngine& engine) {
  if (!(x1 > 0.0) || x1 > spec.radius() * (1.0 + 1e-12)) {
    throw DomainError("g_prime: x1 must lie in (0, R]");
  }
  const double radius = spec.radius();
  const double order = spec.ratio_order();
  // -M(r)/r = 1 - R h(rR)/r. The positive part is integrated on its own so the
  // expectation stays away from zero where g' changes sign; its r -> 0 limit
  // is R^2/n.
  const double small_r_limit = radius * radius / spec.n();
  const double mean_shrink = engine.ncx2(
      NoncentralChiSquare(spec.n() + 2, x1 * x1), [=](double v) {
        const double r = std::sqrt(v);
        if (r == 0.0) return small_r_limit;
        return radius * bessel_ratio(order, r * radius) / r;
      });
  return x1 * (1.0 - mean_shrink);
}

}  // namespace spherecap
