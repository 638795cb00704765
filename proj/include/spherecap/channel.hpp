#pragma once

// Analytic quantities for X uniform on the sphere of radius R in R^n observed
// through Y_gamma = sqrt(gamma) X + Z, Z ~ N(0, I_n). Everything is in nats.

#include <vector>

#include "spherecap/expect.hpp"

namespace spherecap {

/// Dimension n >= 1 and sphere radius R > 0.
class ChannelSpec {
 public:
  ChannelSpec(int n, double radius);

  int n() const noexcept { return n_; }
  double radius() const noexcept { return radius_; }
  /// Order n/2 of the Bessel ratio governing the posterior mean.
  double ratio_order() const noexcept { return 0.5 * n_; }

 private:
  int n_;
  double radius_;
};

/// SNR fraction gamma in [0, 1] along the I-MMSE path.
class SnrFraction {
 public:
  explicit SnrFraction(double gamma);
  double value() const noexcept { return gamma_; }

 private:
  double gamma_;
};

struct InfoDensityProfile {
  std::vector<double> xnorm_grid;
  std::vector<double> values;  // i(x, P) in nats
};

/// log f_Y(y) at ||y|| = ynorm for the unit-SNR channel.
double log_output_pdf(const ChannelSpec& spec, double ynorm);
double output_pdf(const ChannelSpec& spec, double ynorm);

/// ||E[X | Y = y]|| = R h_{n/2}(R ||y||).
double conditional_mean_magnitude(const ChannelSpec& spec, double ynorm);

/// mmse(X | Y_gamma) = R^2 - R^2 E[h^2_{n/2}(sqrt(gamma) R sqrt(V))],
/// V ~ chi2'(n, gamma R^2).
double mmse_at_snr(const ChannelSpec& spec, SnrFraction gamma,
                   const ExpectationEngine& engine);

/// MMSE of a Gaussian input N(0, (R^2/n) I_n) with the same second moment.
double mmse_gaussian_reference(int n, double radius);

/// E[||E[X | Y_gamma]||^2] when the channel input is the origin:
/// R^2 E[h^2_{n/2}(sqrt(gamma) R sqrt(V))], V ~ chi2(n).
double posterior_energy_at_zero(const ChannelSpec& spec, SnrFraction gamma,
                                const ExpectationEngine& engine);

/// I(X; Y) in nats from the closed form with a single chi2'(n, R^2)
/// expectation of log(I_{n/2-1}(R sqrt V) / (R sqrt V)^{n/2-1}).
double mutual_information(const ChannelSpec& spec, const ExpectationEngine& engine);

/// I(X; Y) = 1/2 int_0^1 mmse(X | Y_gamma) d gamma.
double mutual_info_via_immse(const ChannelSpec& spec,
                             const ExpectationEngine& engine);

/// i(x, P) at ||x|| = xnorm: -(n/2) log(2 pi e) - E[log f_Y(x + Z)].
double info_density(const ChannelSpec& spec, double xnorm,
                    const ExpectationEngine& engine);

/// i(x, P) on `grid_points` evenly spaced norms in [0, R], endpoints exact.
InfoDensityProfile info_density_profile(const ChannelSpec& spec, int grid_points,
                                        const ExpectationEngine& engine);

/// d/dx1 i(x1 e1, P) = -x1 E[M(sqrt V) / sqrt V] with V ~ chi2'(n+2, x1^2)
/// and M(r) = -r + R h_{n/2}(r R).
double g_prime(const ChannelSpec& spec, double x1, const ExpectationEngine& engine);

}  // namespace spherecap
