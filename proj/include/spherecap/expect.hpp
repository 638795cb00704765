#pragma once

// Expectation engine for functionals of (noncentral) chi-square laws and of
// the boxcar-smoothed Gaussian vector W used by the alternative threshold
// characterization. Deterministic quadrature and seeded Monte Carlo share one
// call contract through ExpectationEngine.

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace spherecap {

using ScalarFn = std::function<double(double)>;
using PairFn = std::function<double(double, double)>;

/// Law of ||x + Z||^2 for Z ~ N(0, I_dof) and ||x||^2 = noncentrality.
class NoncentralChiSquare {
 public:
  NoncentralChiSquare(int dof, double noncentrality);

  int dof() const noexcept { return dof_; }
  double noncentrality() const noexcept { return noncentrality_; }
  double mean() const noexcept { return dof_ + noncentrality_; }
  double variance() const noexcept { return 2.0 * dof_ + 4.0 * noncentrality_; }

 private:
  int dof_;
  double noncentrality_;
};

/// Tolerances and truncation settings for every deterministic integral.
struct QuadratureSpec {
  double rel_tol = 1e-10;
  double abs_tol = 1e-12;
  /// First Gauss-Laguerre size tried; doubled until two sizes agree.
  int min_nodes = 16;
  int max_nodes = 256;
  double poisson_trunc_mass = 1e-14;
  double radial_trunc_sigmas = 12.0;
  /// When node doubling stalls (integrands with singularities close to the
  /// origin, e.g. tanh^2(R sqrt v) at large R), retry with adaptive
  /// Gauss-Kronrod over sqrt(V) instead of throwing.
  bool radial_fallback = true;

  void validate() const;
  /// Tighter spec used to re-check residuals: doubled node counts, rel_tol/10.
  QuadratureSpec refined() const;
};

struct McSpec {
  std::uint64_t seed = 20190101;
  std::int64_t samples = 1'000'000;

  void validate() const;
};

struct McEstimate {
  double mean;
  double std_error;
  std::int64_t samples;
};

/// W = (W_1, ..., W_n) with W_1 = R U + G (U uniform on (0,1), G standard
/// normal), whose density is (Q(w - R) - Q(w)) / R, and W_2..W_n iid N(0,1).
class BoxcarGaussianLaw {
 public:
  BoxcarGaussianLaw(int n, double radius);

  int n() const noexcept { return n_; }
  double radius() const noexcept { return radius_; }

  double w1_density(double w) const;
  double w1_cdf(double w) const;

 private:
  int n_;
  double radius_;
};

/// Poisson(mean) probabilities for k = first, first+1, ..., chosen so the
/// omitted mass is at most `max_omitted`. Weights are renormalized to sum 1.
struct PoissonWindow {
  int first;
  std::vector<double> weights;
  double omitted_mass;
};

PoissonWindow poisson_window(double mean, double max_omitted);

/// E[f(V)], V ~ chi2'(dof, lambda): Poisson(lambda/2) mixture of central
/// chi2_{dof+2k} terms, each by generalized Gauss-Laguerre. The node count is
/// doubled until successive sums differ by at most max(rel_tol |E|, abs_tol).
/// Past max_nodes it falls back to expect_ncx2_radial, or throws
/// NonConvergenceError when spec.radial_fallback is off.
double expect_ncx2(const NoncentralChiSquare& law, const ScalarFn& f,
                   const QuadratureSpec& spec = {});
/// E[f(V)] by adaptive Gauss-Kronrod against the noncentral chi density of
/// sqrt(V), truncated to sqrt(dof + lambda) - 1 - T .. sqrt(dof + lambda) + T.
double expect_ncx2_radial(const NoncentralChiSquare& law, const ScalarFn& f,
                          const QuadratureSpec& spec = {});

/// E[g(W_1, ||W||)] for the BoxcarGaussianLaw: adaptive Gauss-Kronrod over w_1
/// on [-T, R + T] (T = radial_trunc_sigmas) against the W_1 density, with the
/// inner expectation over S ~ chi2_{n-1} where ||W|| = sqrt(w_1^2 + S).
double expect_boxcar(const BoxcarGaussianLaw& law, const PairFn& g,
                   const QuadratureSpec& spec = {});

/// Adaptive 21-point Gauss-Kronrod on [a, b] to spec.rel_tol (relative to
/// the L1 norm of f). Throws NonConvergenceError if the error estimate stays
/// above max(rel_tol * L1, abs_tol) after subdivision.
double integrate(const ScalarFn& f, double a, double b,
                 const QuadratureSpec& spec);

// ---------------------------------------------------------------- sampling

/// Name of the random-number scheme, recorded in CLI metadata.
inline constexpr std::string_view kRngAlgorithm =
    "mt19937_64/box-muller;stream_seed=splitmix64(seed+(stream+1)*0x9e3779b97f4a7c15)";

/// Samples are produced in fixed chunks; chunk c draws from stream c.
inline constexpr std::int64_t kMcChunk = 1 << 16;

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream);

/// Standard normal draws from mt19937_64 through Box-Muller. Both generator
/// and transform are fully specified, so streams are bit-reproducible.
class NormalStream {
 public:
  NormalStream(std::uint64_t seed, std::uint64_t stream);

  /// Uniform on the open interval (0, 1) with 53 random bits.
  double uniform();
  double normal();

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

class Ncx2Sampler {
 public:
  Ncx2Sampler(const NoncentralChiSquare& law, std::uint64_t seed,
              std::uint64_t stream = 0);
  double operator()();

 private:
  int dof_;
  double shift_;
  NormalStream normals_;
};

/// Draws (W_1, ||W||) for the BoxcarGaussianLaw.
class BoxcarSampler {
 public:
  BoxcarSampler(const BoxcarGaussianLaw& law, std::uint64_t seed,
              std::uint64_t stream = 0);
  std::pair<double, double> operator()();

 private:
  int n_;
  double radius_;
  NormalStream normals_;
};

/// mc.samples i.i.d. draws of V = (Z_1 + sqrt(lambda))^2 + sum_{i>=2} Z_i^2,
/// in the same chunk/stream order used by mc_expect_ncx2.
std::vector<double> sample_ncx2(const NoncentralChiSquare& law,
                                const McSpec& mc);

McEstimate mc_expect_ncx2(const NoncentralChiSquare& law, const ScalarFn& f,
                          const McSpec& mc);
McEstimate mc_expect_boxcar(const BoxcarGaussianLaw& law, const PairFn& g,
                          const McSpec& mc);

// ------------------------------------------------------------------ engine

/// Configured evaluator used by the channel and threshold modules.
/// Immutable after construction and safe to share across threads.
class ExpectationEngine {
 public:
  enum class Method { Quadrature, MonteCarlo };

  explicit ExpectationEngine(QuadratureSpec spec = {});
  /// Monte Carlo for the chi-square and W expectations; `spec` still governs
  /// the outer one-dimensional integrals (e.g. over the SNR fraction).
  ExpectationEngine(McSpec mc, QuadratureSpec spec = {});

  Method method() const noexcept { return method_; }
  const QuadratureSpec& quadrature() const noexcept { return spec_; }
  const std::optional<McSpec>& monte_carlo() const noexcept { return mc_; }

  double ncx2(const NoncentralChiSquare& law, const ScalarFn& f) const;
  double boxcar(const BoxcarGaussianLaw& law, const PairFn& g) const;
  double integrate(const ScalarFn& f, double a, double b) const;

  ExpectationEngine refined() const;
  std::string describe() const;

 private:
  Method method_;
  QuadratureSpec spec_;
  std::optional<McSpec> mc_;
};

}  // namespace spherecap
