#include <gtest/gtest.h>

#include <array>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <map>
#include <numbers>

#include "spherecap/channel.hpp"
#include "spherecap/errors.hpp"
#include "spherecap/thresholds.hpp"

using namespace spherecap;

namespace {

constexpr std::array<double, 20> kRbarTable = {
    1.66666666666667, 2.45611664736469, 3.06359737434855, 3.57757757757758,
    4.03118961709422, 4.43556250720197, 4.81214227447884, 5.15572151567849,
    5.48648648648649, 5.78959543588385, 6.07881880995069, 6.35605431486237,
    6.6228093998763,  6.88030492442816, 7.12954591959504, 7.36336336336336,
    7.59823569245457, 7.81852002501162, 8.04149224519065, 8.25039696202625};

const ExpectationEngine& quad() {
  static const ExpectationEngine e;
  return e;
}

const RootSpec kRoots{};

const ThresholdResult& rbar(int n) {
  static std::map<int, ThresholdResult> cache;
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, solve_rbar(n, kRoots, quad())).first;
  return it->second;
}

double phi(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }

// Capacity-condition left side for n = 1 and n = 3 written with explicit
// radial densities and closed-form h_{1/2}, h_{3/2}, integrated by nested
// Gauss-Kronrod (no chi-square mixture machinery).
double capacity_lhs_oracle(int n, double radius) {
  using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
  auto h = [n](double x) {
    if (n == 1) return std::tanh(x);
    return x < 1e-4 ? x / 3.0 - x * x * x / 45.0 : 1.0 / std::tanh(x) - 1.0 / x;
  };
  // Density of ||a e1 + Z|| in dimension n (a >= 0).
  auto radial = [n](double r, double a) {
    if (n == 1) return phi(r - a) + phi(r + a);
    if (a == 0.0) return std::sqrt(2.0 / std::numbers::pi) * r * r * std::exp(-0.5 * r * r);
    return r / a * (phi(r - a) - phi(r + a));
  };
  auto mean_h2 = [&](double scale, double a) {
    auto f = [&](double r) {
      const double v = h(scale * r);
      return radial(r, a) * v * v;
    };
    return GK::integrate(f, 0.0, a + 14.0, 15, 1e-13);
  };
  auto outer = [&](double g) {
    const double scale = std::sqrt(g) * radius;
    return mean_h2(scale, 0.0) + mean_h2(scale, std::sqrt(g) * radius);
  };
  return GK::integrate(outer, 0.0, 1.0, 15, 1e-12);
}

// The closed form in its direct log arrangement; loses digits as c -> 0.
double asymptotic_direct(double c) {
  const double c2 = c * c;
  const double s = std::sqrt(4.0 * c2 + 1.0);
  return (std::log(s + 1.0) - std::log(c2 + 1.0) - std::log(2.0) - s + 2.0 * c2 + 1.0) / c2;
}

}  // namespace

TEST(SolveBracketed, SimpleRootAndContract) {
  const ThresholdResult r =
      solve_bracketed([](double x) { return x * x * x - 2.0; }, 0.0, 2.0, kRoots);
  EXPECT_NEAR(r.value, std::cbrt(2.0), 1e-10);
  EXPECT_LE(std::abs(r.residual), kRoots.ftol);
  EXPECT_LE(r.bracket_lo, r.value);
  EXPECT_GE(r.bracket_hi, r.value);
  EXPECT_GT(r.iterations, 0);
  EXPECT_FALSE(r.multiple_roots);
}

TEST(SolveBracketed, NoBracketAndMultipleRoots) {
  EXPECT_THROW(solve_bracketed([](double x) { return x * x + 1.0; }, -1.0, 1.0, kRoots),
               NoBracketError);
  const auto sine = [](double x) { return std::sin(x); };
  EXPECT_THROW(solve_bracketed(sine, 0.5, 3.0, kRoots, [](double) { return 1.0; }),
               NoBracketError);
  const ThresholdResult r = solve_bracketed(sine, 0.5, 10.0, kRoots, sine);
  EXPECT_TRUE(r.multiple_roots);
  EXPECT_NEAR(r.value, 3.0 * std::numbers::pi, 1e-10);
}

TEST(RootSpec, Validation) {
  RootSpec spec;
  spec.xtol = 0.0;
  EXPECT_THROW(spec.validate(), DomainError);
  spec = RootSpec{};
  spec.scan_points = 2;
  EXPECT_THROW(spec.validate(), DomainError);
}

TEST(CapacityCondition, LimitsAndFrozenPoints) {
  EXPECT_LT(capacity_condition_lhs(3, 1e-4, quad()), 1e-8);
  EXPECT_LE(capacity_condition_lhs(2, std::sqrt(2.0), quad()), 1.0);
  EXPECT_NEAR(capacity_condition_lhs(1, 1.665925641, quad()), 1.0, 1e-6);
  EXPECT_THROW(capacity_condition_lhs(0, 1.0, quad()), DomainError);
  EXPECT_THROW(capacity_condition_lhs(1, 0.0, quad()), DomainError);
}

TEST(CapacityCondition, MatchesIndependentRadialOracle) {
  for (int n : {1, 3}) {
    for (double radius : {0.7, 1.6, 3.0}) {
      EXPECT_NEAR(capacity_condition_lhs(n, radius, quad()), capacity_lhs_oracle(n, radius), 1e-9)
          << "n=" << n << " R=" << radius;
    }
  }
}

TEST(CapacityCondition, PropertyIncreasingInRadius) {
  for (int n : {1, 4}) {
    double previous = 0.0;
    for (double radius = 0.25; radius <= 3.0 * std::sqrt(n); radius += 0.25) {
      const double lhs = capacity_condition_lhs(n, radius, quad());
      EXPECT_GT(lhs, previous) << "n=" << n << " R=" << radius;
      previous = lhs;
    }
  }
}

TEST(SolveRbar, FrozenValues) {
  EXPECT_NEAR(rbar(1).value, 1.665925641, 1e-6);
  EXPECT_NEAR(rbar(2).value, 2.456, 5e-3);
  EXPECT_NEAR(rbar(20).value, 8.250, 5e-3);
  EXPECT_EQ(rbar(1).method, ThresholdMethod::MainIntegral);
  EXPECT_EQ(rbar(1).n, 1);
}

TEST(SolveRbar, PropertyTableTrendAndOrdering) {
  double previous = 0.0;
  for (int n = 1; n <= 20; ++n) {
    const ThresholdResult& r = rbar(n);
    const double root_n = std::sqrt(static_cast<double>(n));
    EXPECT_NEAR(r.value, kRbarTable[n - 1], 5e-3) << "n=" << n;
    EXPECT_FALSE(r.multiple_roots) << "n=" << n;
    EXPECT_LE(std::abs(r.residual), kRoots.ftol);
    EXPECT_LE(r.bracket_lo, r.value);
    EXPECT_GE(r.bracket_hi, r.value);
    const double normalized = r.value / root_n;
    EXPECT_GE(normalized, previous) << "n=" << n;
    EXPECT_GE(normalized, 1.66);
    EXPECT_LE(normalized, 1.861);
    previous = normalized;
    if (n >= 2) {
      EXPECT_GT(r.value, root_n);
    }
    EXPECT_LT(solve_rbar_mmse(n, kRoots, quad()).value, r.value) << "n=" << n;
  }
}

TEST(SolveRbar, ResidualSurvivesRefinedQuadrature) {
  const ExpectationEngine refined = quad().refined();
  for (int n : {1, 2, 7, 20}) {
    const double lhs = capacity_condition_lhs(n, rbar(n).value, refined);
    EXPECT_LE(std::abs(lhs - 1.0), kRoots.ftol) << "n=" << n;
  }
}

TEST(SolveRbar, ThresholdFlattensInformationDensity) {
  for (int n : {1, 2, 3}) {
    const double r = rbar(n).value;
    auto gap = [n](double radius) {
      const ChannelSpec spec(n, radius);
      return info_density(spec, 0.0, quad()) - info_density(spec, radius, quad());
    };
    EXPECT_LE(std::abs(gap(r)), 1e-5) << "n=" << n;
    EXPECT_GT(gap(1.01 * r), 0.0) << "n=" << n;
    EXPECT_LT(gap(0.99 * r), 0.0) << "n=" << n;
  }
}

TEST(AltCondition, AgreesWithMainCharacterization) {
  for (int n = 1; n <= 10; ++n) {
    const ThresholdResult alt = solve_rbar_alt(n, kRoots, quad());
    EXPECT_EQ(alt.method, ThresholdMethod::AltExpectation);
    EXPECT_NEAR(alt.value, rbar(n).value, 1e-6) << "n=" << n;
  }
  EXPECT_NEAR(solve_rbar_alt(2, kRoots, quad()).value, 2.456, 5e-3);
  EXPECT_NEAR(alt_condition_lhs(1, 1.665925641, quad()), 0.5, 1e-8);
}

TEST(N1Tanh, MatchesOtherCharacterizations) {
  const ThresholdResult t = solve_rbar_n1_tanh(kRoots);
  EXPECT_NEAR(t.value, 1.665925641, 1e-6);
  EXPECT_NEAR(t.value, rbar(1).value, 1e-5);
  EXPECT_NEAR(t.value, solve_rbar_alt(1, kRoots, quad()).value, 1e-5);
  EXPECT_EQ(t.method, ThresholdMethod::N1Tanh);
  // The same integral through the generic W expectation.
  for (double radius : {0.5, 1.2, 2.0}) {
    EXPECT_NEAR(n1_tanh_lhs(radius), alt_condition_lhs(1, radius, quad()), 1e-10);
  }
}

TEST(Asymptotic, ConstantAndClosedForm) {
  const ThresholdResult c = solve_c(kRoots);
  EXPECT_NEAR(c.value, 1.860935682, 1e-6);
  EXPECT_EQ(c.method, ThresholdMethod::AsymptoticC);
  EXPECT_NEAR(asymptotic_lhs(1e-4), 0.0, 1e-7);
  EXPECT_NEAR(asymptotic_lhs_closed_form(1.0), asymptotic_lhs_quadrature(1.0), 1e-10);
  for (double probe : {0.3, 1.0, 1.86, 2.7, 10.0}) {
    EXPECT_NEAR(asymptotic_lhs_closed_form(probe), asymptotic_direct(probe), 1e-12);
    EXPECT_NEAR(asymptotic_lhs_closed_form(probe), asymptotic_lhs_quadrature(probe), 1e-10);
  }
  EXPECT_THROW(asymptotic_lhs(0.0), DomainError);
}

TEST(Asymptotic, FiniteDimensionRatioApproachesConstant) {
  // Rbar_n / sqrt(n) at n = 20 sits below c and above its n = 10 value.
  const double c = solve_c(kRoots).value;
  EXPECT_LT(rbar(20).value / std::sqrt(20.0), c);
  EXPECT_GT(rbar(20).value / std::sqrt(20.0), rbar(10).value / std::sqrt(10.0));
}

TEST(Sufficiency, ClosedFormMatchesQuadrature) {
  EXPECT_DOUBLE_EQ(sufficiency_lhs(0.0), 2.0);
  for (double a : {1e-3, 0.05, 0.2, 0.2368, 0.25, 0.3, 0.45, 0.49}) {
    EXPECT_NEAR(sufficiency_lhs(a), sufficiency_lhs_quadrature(a), 1e-10) << "a=" << a;
  }
  for (double a : {0.2, 0.25}) {
    EXPECT_EQ(sufficiency_lhs(a) > 1.0, sufficiency_lhs_quadrature(a) > 1.0);
  }
  EXPECT_THROW(sufficiency_lhs(0.5), DomainError);
  EXPECT_THROW(sufficiency_lhs(-0.1), DomainError);
}

TEST(Sufficiency, RootAndDimension) {
  EXPECT_LE(sufficiency_check(2), 1.0);
  EXPECT_GT(sufficiency_check(1), 1.0);
  const ThresholdResult a = solve_sufficiency_a(kRoots);
  EXPECT_EQ(a.method, ThresholdMethod::SufficiencyA);
  EXPECT_NEAR(sufficiency_lhs_quadrature(a.value), 1.0, 1e-10);
  // Root of the Jensen-bound integral at c = 1 (regression value).
  EXPECT_NEAR(a.value, 0.2368103596, 1e-9);
  EXPECT_NEAR(sufficiency_dimension(a.value), 1.0 / (1.0 - 2.0 * a.value), 1e-15);
  EXPECT_NEAR(sufficiency_dimension(a.value), 1.892, 0.01);
}

TEST(MmseThreshold, TableValuesAndLimit) {
  EXPECT_NEAR(solve_rbar_mmse(1, kRoots, quad()).value, 1.0582, 5e-3);
  EXPECT_NEAR(solve_rbar_mmse(2, kRoots, quad()).value, 1.5356, 5e-3);
  EXPECT_NEAR(solve_rbar_mmse(20, kRoots, quad()).value, 5.1082, 5e-3);
  EXPECT_GT(9.0 - std::sqrt(69.0), 0.0);
  EXPECT_NEAR(mmse_limit_constant(), 1.15096, 1e-5);
  const double r25 = solve_rbar_mmse(25, kRoots, quad()).value / 5.0;
  const double r26 = solve_rbar_mmse(26, kRoots, quad()).value / std::sqrt(26.0);
  EXPECT_LT(r26, mmse_limit_constant());
  EXPECT_GT(r26, r25);
  const double r1 = solve_rbar_mmse(1, kRoots, quad()).value;
  EXPECT_NEAR(mmse_condition_lhs(1, r1, quad()), 1.0, 1e-9);
}

TEST(MonteCarloEngine, SolverRunsOnSampledExpectations) {
  McSpec mc;
  mc.seed = 17;
  mc.samples = 200'000;
  const ExpectationEngine sim(mc);
  const ThresholdResult r = solve_rbar_mmse(2, kRoots, sim);
  EXPECT_NEAR(r.value, solve_rbar_mmse(2, kRoots, quad()).value, 0.02);
  EXPECT_EQ(r.value, solve_rbar_mmse(2, kRoots, sim).value);
}
