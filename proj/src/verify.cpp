#include "spherecap/verify.hpp"

#include <cmath>
#include <exception>
#include <functional>
#include <limits>
#include <numbers>
#include <sstream>

#include "spherecap/channel.hpp"
#include "spherecap/specfun.hpp"
#include "spherecap/thresholds.hpp"

namespace spherecap {

namespace {

std::string label(const char* base, int n, double radius) {
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os << base << "[n=" << n << ",R=" << radius << "]";
  return os.str();
}

class Suite {
 public:
  // `observe` returns the error measure compared against `tolerance`.
  void check(std::string name, double tolerance, const std::function<double()>& observe) {
    double observed = std::numeric_limits<double>::quiet_NaN();
    bool pass = false;
    try {
      observed = observe();
      pass = observed <= tolerance;
    } catch (const std::exception& e) {
      name += std::string(" (error: ") + e.what() + ")";
    }
    results_.push_back({std::move(name), tolerance, observed, pass});
  }

  std::vector<CheckResult> take() { return std::move(results_); }

 private:
  std::vector<CheckResult> results_;
};

double unit_sphere_area(int n) {
  return 2.0 * std::pow(std::numbers::pi, 0.5 * n) / std::tgamma(0.5 * n);
}

double normal_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

void identity_suite(Suite& suite, const ExpectationEngine& engine) {
  QuadratureSpec tight;
  tight.rel_tol = 1e-12;
  tight.abs_tol = 1e-14;

  for (int n : {1, 2, 3}) {
    for (double radius : {0.5, 1.5, 3.0}) {
      const ChannelSpec spec(n, radius);
      suite.check(label("pdf_normalization", n, radius), 1e-8, [&] {
        const double area = unit_sphere_area(n);
        const double mass = integrate(
            [&](double r) { return area * std::pow(r, n - 1) * output_pdf(spec, r); },
            0.0, radius + 14.0, tight);
        return std::abs(mass - 1.0);
      });
      suite.check(label("i_mmse_identity", n, radius), 1e-6, [&] {
        return std::abs(mutual_information(spec, engine) -
                        mutual_info_via_immse(spec, engine));
      });
      suite.check(label("info_density_flat_at_R", n, radius), 1e-8, [&] {
        return std::abs(info_density(spec, radius, engine) -
                        mutual_information(spec, engine));
      });
    }
  }

  suite.check("pdf_closed_form_n1_n3", 1e-12, [] {
    double worst = 0.0;
    for (double radius : {0.5, 1.0, 2.0}) {
      for (double y : {0.0, 0.3, 1.0, 2.5, 5.0}) {
        const double n1 = 0.5 * (normal_pdf(y - radius) + normal_pdf(y + radius));
        const double got1 = output_pdf(ChannelSpec(1, radius), y);
        worst = std::max(worst, std::abs(got1 - n1) / n1);
        const double z = y * radius;
        const double shape = z == 0.0 ? 1.0 : std::sinh(z) / z;
        const double n3 = std::pow(2.0 * std::numbers::pi, -1.5) *
                          std::exp(-0.5 * (radius * radius + y * y)) * shape;
        const double got3 = output_pdf(ChannelSpec(3, radius), y);
        worst = std::max(worst, std::abs(got3 - n3) / n3);
      }
    }
    return worst;
  });

  suite.check("bessel_ratio_half_is_tanh", 1e-12, [] {
    double worst = 0.0;
    for (int i = 0; i <= 400; ++i) {
      const double x = 0.05 * i;
      worst = std::max(worst, std::abs(specfun::bessel_ratio(0.5, x) - std::tanh(x)));
    }
    return worst;
  });

  suite.check("bessel_ratio_bounds_sandwich", 0.0, [] {
    double violations = 0.0;
    for (int i = 1; i <= 100; ++i) {
      const double v = 0.5 + 0.2 * i;
      for (int j = 0; j < 100; ++j) {
        const double x = 0.01 * std::pow(1.12, j);
        const double h = specfun::bessel_ratio(v, x);
        const auto b = specfun::bessel_ratio_bounds(v, x);
        if (h < b.lower * (1.0 - 1e-14) || h > b.upper * (1.0 + 1e-14)) violations += 1.0;
      }
    }
    return violations;
  });

  suite.check("asymptotic_c", 1e-6, [] {
    return std::abs(solve_c(RootSpec{}).value - 1.860935682);
  });
  suite.check("asymptotic_closed_form_vs_quadrature", 1e-10, [] {
    double worst = 0.0;
    for (double c : {0.5, 1.0, 1.86, 2.5}) {
      worst = std::max(worst,
                       std::abs(asymptotic_lhs_closed_form(c) - asymptotic_lhs_quadrature(c)));
    }
    return worst;
  });
  suite.check("sufficiency_closed_form_vs_quadrature", 1e-10, [] {
    double worst = 0.0;
    for (double a : {0.05, 0.2, 0.25, 0.4}) {
      worst = std::max(worst, std::abs(sufficiency_lhs(a) - sufficiency_lhs_quadrature(a)));
    }
    return worst;
  });
  suite.check("mmse_limit_constant", 1e-5,
              [] { return std::abs(mmse_limit_constant() - 1.15096); });
  suite.check("rbar_n1_tanh", 1e-6, [] {
    return std::abs(solve_rbar_n1_tanh(RootSpec{}).value - 1.665925641);
  });
}

void full_suite(Suite& suite, const ExpectationEngine& engine) {
  RootSpec roots;
  for (int n : {1, 2, 3}) {
    suite.check(label("rbar_main_vs_alt", n, 0.0), 1e-5, [&] {
      return std::abs(solve_rbar(n, roots, engine).value -
                      solve_rbar_alt(n, roots, engine).value);
    });
    suite.check(label("threshold_info_density_flatness", n, 0.0), 1e-5, [&] {
      const double rbar = solve_rbar(n, roots, engine).value;
      const ChannelSpec spec(n, rbar);
      return std::abs(info_density(spec, 0.0, engine) - info_density(spec, rbar, engine));
    });
  }

  McSpec mc;
  mc.samples = 10'000'000;
  for (int n : {1, 2, 3, 5, 10}) {
    const double root_n = std::sqrt(static_cast<double>(n));
    for (double radius : {0.5, root_n, 2.0 * root_n}) {
      const double order = 0.5 * n;
      suite.check(label("mc_vs_quad_h2_sigmas", n, radius), 4.0, [&] {
        const NoncentralChiSquare law(n, radius * radius);
        const auto f = [=](double v) {
          const double h = specfun::bessel_ratio(order, radius * std::sqrt(v));
          return h * h;
        };
        const McEstimate est = mc_expect_ncx2(law, f, mc);
        return std::abs(est.mean - engine.ncx2(law, f)) / est.std_error;
      });
      suite.check(label("mc_vs_quad_alt_sigmas", n, radius), 4.0, [&] {
        const BoxcarGaussianLaw law(n, radius);
        const auto g = [=](double w1, double wnorm) {
          return wnorm == 0.0 ? 0.0 : w1 / wnorm * specfun::bessel_ratio(order, radius * wnorm);
        };
        const McEstimate est = mc_expect_boxcar(law, g, mc);
        return std::abs(est.mean - engine.boxcar(law, g)) / est.std_error;
      });
    }
  }
}

}  // namespace

std::vector<CheckResult> run_verification(VerifyLevel level) {
  const ExpectationEngine engine;
  Suite suite;
  identity_suite(suite, engine);
  if (level == VerifyLevel::Full) full_suite(suite, engine);
  return suite.take();
}

}  // namespace spherecap
