#include <gtest/gtest.h>

#include <algorithm>
#include <boost/math/distributions/non_central_chi_squared.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <numbers>
#include <vector>

#include "spherecap/errors.hpp"
#include "spherecap/expect.hpp"
#include "spherecap/gauss_laguerre.hpp"
#include "spherecap/specfun.hpp"

using namespace spherecap;

namespace {

// E[f(V)] against the boost noncentral chi-square density, by adaptive
// Gauss-Kronrod on (0, upper).
double density_oracle(int dof, double lambda, const std::function<double(double)>& f) {
  const boost::math::non_central_chi_squared law(dof, lambda);
  const double upper = dof + lambda + 40.0 * std::sqrt(2.0 * dof + 4.0 * lambda) + 40.0;
  using Rule = boost::math::quadrature::gauss_kronrod<double, 61>;
  // Split at the mean to help the adaptive rule with the density peak.
  const double mid = dof + lambda;
  auto g = [&](double v) { return v <= 0.0 ? 0.0 : boost::math::pdf(law, v) * f(v); };
  if (dof == 1) {
    // Integrable v^{-1/2} singularity at 0: substitute v = u^2.
    auto h = [&](double u) { return 2.0 * u * g(u * u); };
    return Rule::integrate(h, 0.0, std::sqrt(mid), 20, 1e-13) +
           Rule::integrate(h, std::sqrt(mid), std::sqrt(upper), 20, 1e-13);
  }
  return Rule::integrate(g, 0.0, mid, 20, 1e-13) + Rule::integrate(g, mid, upper, 20, 1e-13);
}

double h2(double v, double x) {
  const double h = specfun::bessel_ratio(v, x);
  return h * h;
}

}  // namespace

TEST(NoncentralChiSquare, MomentsAndValidation) {
  const NoncentralChiSquare law(4, 2.25);
  EXPECT_EQ(law.mean(), 6.25);
  EXPECT_EQ(law.variance(), 17.0);
  EXPECT_THROW(NoncentralChiSquare(0, 1.0), DomainError);
  EXPECT_THROW(NoncentralChiSquare(2, -1.0), DomainError);
}

TEST(Specs, Validation) {
  QuadratureSpec spec;
  EXPECT_NO_THROW(spec.validate());
  spec.max_nodes = 14;
  EXPECT_THROW(spec.validate(), DomainError);
  spec = QuadratureSpec{};
  spec.rel_tol = 0.0;
  EXPECT_THROW(spec.validate(), DomainError);
  McSpec mc;
  mc.samples = 999;
  EXPECT_THROW(mc.validate(), DomainError);
  const QuadratureSpec r = QuadratureSpec{}.refined();
  EXPECT_EQ(r.min_nodes, 32);
  EXPECT_EQ(r.max_nodes, 512);
  EXPECT_DOUBLE_EQ(r.rel_tol, 1e-11);
}

TEST(GammaRule, ReproducesGammaMoments) {
  // E[T^k] = Gamma(alpha + 1 + k) / Gamma(alpha + 1), exact for k < 2N.
  for (int two_alpha : {-1, 0, 1, 4, 17}) {
    const double alpha = 0.5 * two_alpha;
    const GammaRule& rule = gamma_rule(two_alpha, 12);
    for (int k = 0; k <= 8; ++k) {
      double sum = 0.0;
      for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
        sum += rule.weights[i] * std::pow(rule.nodes[i], k);
      }
      const double want = std::exp(std::lgamma(alpha + 1.0 + k) - std::lgamma(alpha + 1.0));
      EXPECT_NEAR(sum / want, 1.0, 1e-12) << "alpha=" << alpha << " k=" << k;
    }
  }
  EXPECT_THROW(gamma_rule(-2, 4), DomainError);
}

TEST(PoissonWindow, OmittedMassWithinBudget) {
  for (double mean : {0.0, 0.3, 2.0, 17.5, 200.0}) {
    const PoissonWindow w = poisson_window(mean, 1e-14);
    EXPECT_LE(w.omitted_mass, 1e-14);
    double total = 0.0;
    for (double p : w.weights) total += p;
    EXPECT_NEAR(total, 1.0, 1e-14);
    EXPECT_GE(w.first, 0);
  }
}

TEST(ExpectNcx2, TrivialMoments) {
  EXPECT_NEAR(expect_ncx2(NoncentralChiSquare(3, 0.0), [](double v) { return v; }), 3.0, 1e-12);
  EXPECT_NEAR(expect_ncx2(NoncentralChiSquare(4, 2.25), [](double v) { return v; }), 6.25,
              1e-12);
  const NoncentralChiSquare law(3, 2.0);
  const double second = expect_ncx2(law, [](double v) { return v * v; });
  EXPECT_NEAR(second - law.mean() * law.mean(), 14.0, 1e-10);
}

TEST(ExpectNcx2, MatchesMomentGeneratingFunction) {
  // E[exp(-t V)] = (1 + 2t)^{-k/2} exp(-lambda t / (1 + 2t)).
  for (int k : {1, 2, 5, 12}) {
    for (double lambda : {0.0, 0.7, 9.0, 80.0}) {
      for (double t : {0.05, 0.4, 2.0}) {
        const double want =
            std::pow(1.0 + 2.0 * t, -0.5 * k) * std::exp(-lambda * t / (1.0 + 2.0 * t));
        const double got =
            expect_ncx2(NoncentralChiSquare(k, lambda), [t](double v) { return std::exp(-t * v); });
        EXPECT_NEAR(got, want, 1e-10 * want + 1e-13) << k << " " << lambda << " " << t;
      }
    }
  }
}

TEST(ExpectNcx2, MatchesDensityQuadratureOracle) {
  for (int k : {1, 2, 3, 6, 20}) {
    for (double lambda : {0.0, 1.0, 6.0, 45.0}) {
      const double order = 0.5 * k;
      const double scale = 1.3;
      const auto f = [=](double v) { return h2(order, scale * std::sqrt(v)); };
      const double want = density_oracle(k, lambda, f);
      const double got = expect_ncx2(NoncentralChiSquare(k, lambda), f);
      EXPECT_NEAR(got, want, 1e-9) << "k=" << k << " lambda=" << lambda;
    }
  }
}

TEST(ExpectNcx2, MatchesMonteCarloOracle) {
  const NoncentralChiSquare law(2, 1.0);
  const auto f = [](double v) { return h2(1.0, std::sqrt(v)); };
  McSpec mc;
  mc.seed = 11;
  mc.samples = 10'000'000;
  const McEstimate est = mc_expect_ncx2(law, f, mc);
  EXPECT_LE(std::abs(est.mean - expect_ncx2(law, f)), 3.0 * est.std_error);
}

TEST(ExpectNcx2, PoissonTruncationIsConverged) {
  QuadratureSpec loose;
  QuadratureSpec deep;
  deep.poisson_trunc_mass = 1e-28;
  for (double lambda : {3.0, 40.0, 150.0}) {
    const NoncentralChiSquare law(4, lambda);
    const auto f = [](double v) { return h2(2.0, 0.8 * std::sqrt(v)); };
    EXPECT_LT(std::abs(expect_ncx2(law, f, loose) - expect_ncx2(law, f, deep)), loose.abs_tol);
  }
}

TEST(ExpectNcx2, NonConvergenceIsReported) {
  QuadratureSpec spec;
  spec.max_nodes = 32;
  const auto step = [](double v) { return v < 2.0 ? 1.0 : 0.0; };
  spec.radial_fallback = false;
  EXPECT_THROW(expect_ncx2(NoncentralChiSquare(3, 0.0), step, spec), NonConvergenceError);
  // A jump also defeats the adaptive radial rule at the default depth.
  spec.radial_fallback = true;
  EXPECT_THROW(expect_ncx2(NoncentralChiSquare(3, 0.0), step, spec), NonConvergenceError);
}

TEST(ExpectNcx2, RadialRuleAgreesWithLaguerre) {
  for (int dof : {1, 2, 3, 7, 20}) {
    for (double lambda : {0.0, 0.3, 4.0, 60.0}) {
      const NoncentralChiSquare law(dof, lambda);
      const auto f = [](double v) { return std::log1p(v) + std::exp(-0.3 * v); };
      EXPECT_NEAR(expect_ncx2_radial(law, f), expect_ncx2(law, f), 1e-9)
          << "dof=" << dof << " lambda=" << lambda;
    }
  }
}

TEST(ExpectNcx2, NearOriginPolesStillConverge) {
  // tanh^2(R sqrt v) has poles at v = -(pi / 2R)^2; for dof = 1 the law is
  // that of (sqrt(lambda) + Z)^2, so a one-dimensional normal integral is an
  // independent oracle.
  using GK = boost::math::quadrature::gauss_kronrod<double, 61>;
  for (double radius : {2.0, 5.0, 9.0}) {
    const double shift = radius;
    const auto f = [radius](double v) {
      const double t = std::tanh(radius * std::sqrt(v));
      return t * t;
    };
    const auto oracle_integrand = [&](double z) {
      const double t = std::tanh(radius * (shift + z));
      return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi) * t * t;
    };
    const double want = GK::integrate(oracle_integrand, -shift - 13.0, -shift, 15, 1e-13) +
                        GK::integrate(oracle_integrand, -shift, 13.0, 15, 1e-13);
    EXPECT_NEAR(expect_ncx2(NoncentralChiSquare(1, shift * shift), f), want, 1e-9)
        << "R=" << radius;
  }
}

TEST(Sampling, ChiSquareMomentsAndDeterminism) {
  McSpec mc;
  mc.seed = 42;
  mc.samples = 1'000'000;
  auto mean_of = [](const std::vector<double>& xs) {
    double s = 0.0;
    for (double x : xs) s += x;
    return s / static_cast<double>(xs.size());
  };
  const auto a = sample_ncx2(NoncentralChiSquare(1, 0.0), mc);
  ASSERT_EQ(a.size(), 1'000'000u);
  EXPECT_NEAR(mean_of(a), 1.0, 0.005);
  EXPECT_NEAR(mean_of(sample_ncx2(NoncentralChiSquare(5, 4.0), mc)), 9.0, 0.02);

  const auto c = sample_ncx2(NoncentralChiSquare(3, 2.0), mc);
  const double m = mean_of(c);
  double var = 0.0;
  for (double x : c) var += (x - m) * (x - m);
  var /= static_cast<double>(c.size() - 1);
  EXPECT_NEAR(var, 14.0, 0.2);

  EXPECT_EQ(a, sample_ncx2(NoncentralChiSquare(1, 0.0), mc));
  McSpec other = mc;
  other.seed = 43;
  EXPECT_NE(a, sample_ncx2(NoncentralChiSquare(1, 0.0), other));
}

TEST(Sampling, EstimatesAreBitReproducibleAndMatchSamples) {
  McSpec mc;
  mc.seed = 5;
  mc.samples = 200'001;
  const NoncentralChiSquare law(3, 1.5);
  const auto f = [](double v) { return std::sqrt(v); };
  const McEstimate one = mc_expect_ncx2(law, f, mc);
  const McEstimate two = mc_expect_ncx2(law, f, mc);
  EXPECT_EQ(one.mean, two.mean);
  EXPECT_EQ(one.std_error, two.std_error);
  EXPECT_EQ(one.samples, mc.samples);
  // Same draws as sample_ncx2, in the same order.
  double sum = 0.0;
  for (double v : sample_ncx2(law, mc)) sum += std::sqrt(v);
  EXPECT_NEAR(one.mean, sum / static_cast<double>(mc.samples), 1e-12);
}

TEST(BoxcarGaussianLaw, DensityAndCdf) {
  for (double radius : {0.3, 1.0, 4.0}) {
    const BoxcarGaussianLaw law(2, radius);
    QuadratureSpec spec;
    const double mass = integrate([&](double w) { return law.w1_density(w); }, -12.0,
                                  radius + 12.0, spec);
    EXPECT_NEAR(mass, 1.0, 1e-12);
    EXPECT_NEAR(law.w1_cdf(-40.0), 0.0, 1e-15);
    EXPECT_NEAR(law.w1_cdf(radius + 40.0), 1.0, 1e-14);
    for (double w : {-1.0, 0.2, radius, radius + 1.5}) {
      const double step = 1e-5;
      const double slope = (law.w1_cdf(w + step) - law.w1_cdf(w - step)) / (2.0 * step);
      EXPECT_NEAR(slope, law.w1_density(w), 1e-8);
    }
  }
  EXPECT_THROW(BoxcarGaussianLaw(0, 1.0), DomainError);
  EXPECT_THROW(BoxcarGaussianLaw(1, 0.0), DomainError);
}

TEST(BoxcarGaussianLaw, SamplerMatchesCdfKolmogorovSmirnov) {
  const double radius = 1.7;
  const BoxcarGaussianLaw law(1, radius);
  const std::int64_t samples = 1'000'000;
  std::vector<double> w(samples);
  BoxcarSampler draw(law, 2024);
  for (auto& x : w) x = draw().first;
  std::sort(w.begin(), w.end());
  double ks = 0.0;
  for (std::int64_t i = 0; i < samples; ++i) {
    const double cdf = law.w1_cdf(w[i]);
    ks = std::max({ks, std::abs(cdf - static_cast<double>(i) / samples),
                   std::abs(cdf - static_cast<double>(i + 1) / samples)});
  }
  EXPECT_LE(ks, 2.0 / std::sqrt(static_cast<double>(samples)));
}

TEST(ExpectBoxcar, TrivialFunctionals) {
  const BoxcarGaussianLaw law(1, 1.0);
  EXPECT_NEAR(expect_boxcar(law, [](double, double) { return 1.0; }), 1.0, 1e-12);
  EXPECT_NEAR(expect_boxcar(law, [](double w1, double) { return w1; }), 0.5, 1e-12);
  // E[W_1^2] = R^2/3 + 1 and E[||W||^2] = R^2/3 + n.
  const BoxcarGaussianLaw wide(4, 2.0);
  EXPECT_NEAR(expect_boxcar(wide, [](double w1, double) { return w1 * w1; }), 4.0 / 3.0 + 1.0,
              1e-10);
  EXPECT_NEAR(expect_boxcar(wide, [](double, double r) { return r * r; }), 4.0 / 3.0 + 4.0,
              1e-10);
}

TEST(ExpectBoxcar, MatchesMonteCarloOracle) {
  const double radius = 1.5;
  const BoxcarGaussianLaw law(2, radius);
  const PairFn g = [=](double w1, double r) {
    return r == 0.0 ? 0.0 : w1 / r * specfun::bessel_ratio(1.0, radius * r);
  };
  McSpec mc;
  mc.seed = 99;
  mc.samples = 10'000'000;
  const McEstimate est = mc_expect_boxcar(law, g, mc);
  EXPECT_LE(std::abs(est.mean - expect_boxcar(law, g)), 3.0 * est.std_error);
}

TEST(ExpectationEngine, DispatchAndDescription) {
  const ExpectationEngine quad;
  EXPECT_EQ(quad.method(), ExpectationEngine::Method::Quadrature);
  EXPECT_NE(quad.describe().find("method=quad"), std::string::npos);

  McSpec mc;
  mc.seed = 3;
  mc.samples = 5000;
  const ExpectationEngine sim(mc);
  const NoncentralChiSquare law(2, 1.0);
  const auto f = [](double v) { return v; };
  EXPECT_EQ(sim.ncx2(law, f), mc_expect_ncx2(law, f, mc).mean);
  EXPECT_NE(sim.describe().find("seed=3"), std::string::npos);
  EXPECT_NE(sim.describe().find(std::string(kRngAlgorithm)), std::string::npos);
  EXPECT_EQ(sim.refined().monte_carlo()->samples, 10000);
  EXPECT_EQ(quad.refined().quadrature().max_nodes, 512);
}
