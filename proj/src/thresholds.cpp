#include "spherecap/thresholds.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "spherecap/errors.hpp"
#include "spherecap/specfun.hpp"

namespace spherecap {

using specfun::bessel_ratio;
using specfun::gaussian_tail_q;

std::string_view to_string(ThresholdMethod method) {
  switch (method) {
    case ThresholdMethod::MainIntegral: return "MainIntegral";
    case ThresholdMethod::AltExpectation: return "AltExpectation";
    case ThresholdMethod::N1Tanh: return "N1Tanh";
    case ThresholdMethod::AsymptoticC: return "AsymptoticC";
    case ThresholdMethod::MmseCondition: return "MmseCondition";
    case ThresholdMethod::SufficiencyA: return "SufficiencyA";
  }
  return "unknown";
}

void RootSpec::validate() const {
  if (!(xtol > 0.0) || !(ftol > 0.0)) {
    throw DomainError("RootSpec: tolerances must be positive");
  }
  if (max_iter < 1) throw DomainError("RootSpec: max_iter must be >= 1");
  if (scan_points != 0 && scan_points < 3) {
    throw DomainError("RootSpec: scan_points must be 0 or >= 3");
  }
  if (!(polish_width > 0.0)) throw DomainError("RootSpec: polish_width must be positive");
}

namespace {

struct Point {
  double x;
  double f;
};

bool opposite(double a, double b) { return (a < 0.0) != (b < 0.0); }

void require_dimension(int n, const char* what) {
  if (n < 1) throw DomainError(std::string(what) + ": n must be >= 1");
}

void require_radius(double radius, const char* what) {
  if (!(radius > 0.0) || std::isinf(radius)) {
    throw DomainError(std::string(what) + ": radius must be finite and > 0");
  }
}

// Cheaper engine for the sign-change scan. Monte Carlo engines are reused
// as is so the scan sees the same sample paths.
ExpectationEngine scan_engine(const ExpectationEngine& engine) {
  if (engine.method() == ExpectationEngine::Method::MonteCarlo) return engine;
  QuadratureSpec spec = engine.quadrature();
  spec.rel_tol = std::max(spec.rel_tol, 1e-6);
  spec.abs_tol = std::max(spec.abs_tol, 1e-8);
  spec.poisson_trunc_mass = std::max(spec.poisson_trunc_mass, 1e-10);
  return ExpectationEngine(spec);
}

// E[h_v^2(scale sqrt(V))], V ~ chi2'(n, noncentrality).
double mean_h2(int n, double scale, double noncentrality,
               const ExpectationEngine& engine) {
  if (scale == 0.0) return 0.0;
  const double order = 0.5 * n;
  return engine.ncx2(NoncentralChiSquare(n, noncentrality), [=](double v) {
    const double h = bessel_ratio(order, scale * std::sqrt(v));
    return h * h;
  });
}

}  // namespace

ThresholdResult solve_bracketed(const std::function<double(double)>& residual,
                                double lo, double hi, const RootSpec& spec,
                                const std::function<double(double)>& scan) {
  spec.validate();
  if (!(lo < hi)) throw DomainError("solve_bracketed: need lo < hi");

  ThresholdResult result;
  double search_lo = lo;
  double search_hi = hi;

  if (scan && spec.scan_points > 0) {
    const int m = spec.scan_points;
    std::vector<double> xs(m);
    std::vector<double> fs(m);
    for (int i = 0; i < m; ++i) {
      xs[i] = i == m - 1 ? hi : lo + (hi - lo) * i / (m - 1);
      fs[i] = scan(xs[i]);
    }
    int crossings = 0;
    int last = -1;
    for (int i = 0; i + 1 < m; ++i) {
      if (opposite(fs[i], fs[i + 1])) {
        ++crossings;
        last = i;
      }
    }
    if (crossings == 0) {
      throw NoBracketError("solve_bracketed: no sign change on the scan grid",
                           fs.front(), fs.back());
    }
    result.multiple_roots = crossings > 1;
    // Widen the scan cell a little in case the cheap residual misplaced it.
    search_lo = xs[std::max(last - 1, 0)];
    search_hi = xs[std::min(last + 2, m - 1)];
  }

  int evals = 0;
  auto eval = [&](double x) {
    ++evals;
    return Point{x, residual(x)};
  };

  Point a = eval(search_lo);
  Point b = eval(search_hi);
  if (!opposite(a.f, b.f) && (search_lo != lo || search_hi != hi)) {
    a = eval(lo);
    b = eval(hi);
  }
  if (!opposite(a.f, b.f)) {
    if (a.f == 0.0 || b.f == 0.0) {
      const Point root = a.f == 0.0 ? a : b;
      result.value = root.x;
      result.residual = 0.0;
      result.bracket_lo = result.bracket_hi = root.x;
      result.iterations = evals;
      return result;
    }
    throw NoBracketError("solve_bracketed: bracket endpoints do not straddle a root",
                         a.f, b.f);
  }

  bool done = a.f == 0.0 || b.f == 0.0;
  // Bisection down to polish_width.
  while (!done && b.x - a.x > spec.polish_width && evals < spec.max_iter) {
    const Point m = eval(0.5 * (a.x + b.x));
    if (m.f == 0.0) {
      a = b = m;
      done = true;
    } else if (opposite(m.f, a.f)) {
      b = m;
    } else {
      a = m;
    }
  }

  // Safeguarded secant on the two most recent points.
  Point older = a;
  Point newer = b;
  if (std::abs(older.f) < std::abs(newer.f)) std::swap(older, newer);
  while (!done && evals < spec.max_iter && b.x - a.x > spec.xtol) {
    double x = newer.x - newer.f * (newer.x - older.x) / (newer.f - older.f);
    if (!std::isfinite(x) || x <= a.x || x >= b.x) x = 0.5 * (a.x + b.x);
    const Point p = eval(x);
    if (p.f == 0.0) {
      a = b = p;
      break;
    }
    if (opposite(p.f, a.f)) {
      b = p;
    } else {
      a = p;
    }
    const double slope = (p.f - newer.f) / (p.x - newer.x);
    older = newer;
    newer = p;
    if (std::abs(p.f) <= spec.ftol && std::isfinite(slope) && slope != 0.0 &&
        std::abs(p.f / slope) <= spec.xtol) {
      break;
    }
  }

  const Point best = std::abs(a.f) <= std::abs(b.f) ? a : b;
  result.value = best.x;
  result.residual = best.f;
  result.bracket_lo = a.x;
  result.bracket_hi = b.x;
  result.iterations = evals;
  return result;
}

// --------------------------------------------------------- capacity condition

double capacity_condition_lhs(int n, double radius, const ExpectationEngine& engine) {
  require_dimension(n, "capacity_condition_lhs");
  require_radius(radius, "capacity_condition_lhs");
  const double r2 = radius * radius;
  return engine.integrate(
      [&](double g) {
        const double scale = std::sqrt(g) * radius;
        return mean_h2(n, scale, 0.0, engine) + mean_h2(n, scale, g * r2, engine);
      },
      0.0, 1.0);
}

ThresholdResult solve_rbar(int n, const RootSpec& spec, const ExpectationEngine& engine) {
  require_dimension(n, "solve_rbar");
  const double root_n = std::sqrt(static_cast<double>(n));
  const ExpectationEngine coarse = scan_engine(engine);
  ThresholdResult result = solve_bracketed(
      [&](double r) { return capacity_condition_lhs(n, r, engine) - 1.0; },
      0.8 * root_n, 2.6 * root_n, spec,
      [&](double r) { return capacity_condition_lhs(n, r, coarse) - 1.0; });
  result.n = n;
  result.method = ThresholdMethod::MainIntegral;
  return result;
}

// ------------------------------------------------------ alternative condition

double alt_condition_lhs(int n, double radius, const ExpectationEngine& engine) {
  require_dimension(n, "alt_condition_lhs");
  require_radius(radius, "alt_condition_lhs");
  const double order = 0.5 * n;
  return engine.boxcar(BoxcarGaussianLaw(n, radius), [=](double w1, double wnorm) {
    if (wnorm == 0.0) return 0.0;
    return w1 / wnorm * bessel_ratio(order, radius * wnorm);
  });
}

ThresholdResult solve_rbar_alt(int n, const RootSpec& spec,
                               const ExpectationEngine& engine) {
  require_dimension(n, "solve_rbar_alt");
  const double root_n = std::sqrt(static_cast<double>(n));
  const ExpectationEngine coarse = scan_engine(engine);
  ThresholdResult result = solve_bracketed(
      [&](double r) { return alt_condition_lhs(n, r, engine) - 0.5; },
      0.8 * root_n, 2.6 * root_n, spec,
      [&](double r) { return alt_condition_lhs(n, r, coarse) - 0.5; });
  result.n = n;
  result.method = ThresholdMethod::AltExpectation;
  return result;
}

double n1_tanh_lhs(double radius, const QuadratureSpec& spec) {
  require_radius(radius, "n1_tanh_lhs");
  const auto integrand = [radius](double w) {
    const double boxcar = w >= 0.5 * radius
                              ? gaussian_tail_q(w - radius) - gaussian_tail_q(w)
                              : gaussian_tail_q(-w) - gaussian_tail_q(radius - w);
    return boxcar * std::tanh(radius * w);
  };
  const double t = spec.radial_trunc_sigmas;
  const double total = integrate(integrand, -t, 0.0, spec) +
                       integrate(integrand, 0.0, radius, spec) +
                       integrate(integrand, radius, radius + t, spec);
  return total / radius;
}

ThresholdResult solve_rbar_n1_tanh(const RootSpec& spec, const QuadratureSpec& quad) {
  ThresholdResult result = solve_bracketed(
      [&](double r) { return n1_tanh_lhs(r, quad) - 0.5; }, 1.0, 2.2, spec,
      [&](double r) { return n1_tanh_lhs(r, quad) - 0.5; });
  result.n = 1;
  result.method = ThresholdMethod::N1Tanh;
  return result;
}

// ---------------------------------------------------------- large-n constant

namespace {

void require_c(double c, const char* what) {
  if (!(c > 0.0) || std::isinf(c)) {
    throw DomainError(std::string(what) + ": c must be finite and > 0");
  }
}

}  // namespace

double asymptotic_lhs_quadrature(double c) {
  require_c(c, "asymptotic_lhs_quadrature");
  const double c2 = c * c;
  const auto term = [](double t) {
    const double d = 0.5 + std::sqrt(0.25 + t);
    return t / (d * d);
  };
  QuadratureSpec spec;
  spec.rel_tol = 1e-12;
  spec.abs_tol = 1e-15;
  return integrate(
      [&](double g) {
        const double t = g * c2;
        return term(t) + term(t * (1.0 + t));
      },
      0.0, 1.0, spec);
}

double asymptotic_lhs_closed_form(double c) {
  require_c(c, "asymptotic_lhs_closed_form");
  // [log(s + 1) - log(c^2 + 1) - log 2 - s + 2c^2 + 1] / c^2 with
  // s = sqrt(4c^2 + 1), rearranged as (2u + log1p(-u / (1 + c^2))) / c^2,
  // u = 4c^4 / (s + 1)^2, which keeps full precision as c -> 0.
  const double c2 = c * c;
  const double s = std::sqrt(4.0 * c2 + 1.0);
  const double u = 4.0 * c2 * c2 / ((s + 1.0) * (s + 1.0));
  return (2.0 * u + std::log1p(-u / (1.0 + c2))) / c2;
}

double asymptotic_lhs(double c) {
  const double closed = asymptotic_lhs_closed_form(c);
  const double quad = asymptotic_lhs_quadrature(c);
  if (std::abs(closed - quad) > 1e-8) {
    throw InternalDisagreementError(
        "asymptotic_lhs: closed form and quadrature disagree beyond 1e-8");
  }
  return closed;
}

ThresholdResult solve_c(const RootSpec& spec) {
  ThresholdResult result = solve_bracketed(
      [](double c) { return asymptotic_lhs(c) - 1.0; }, 1.0, 3.0, spec,
      [](double c) { return asymptotic_lhs_closed_form(c) - 1.0; });
  result.method = ThresholdMethod::AsymptoticC;
  return result;
}

// ------------------------------------------------------ sufficiency constant

namespace {

void require_a(double a, const char* what) {
  if (!(a >= 0.0 && a < 0.5)) {
    throw DomainError(std::string(what) + ": a must lie in [0, 1/2)");
  }
}

}  // namespace

double sufficiency_lhs(double a) {
  require_a(a, "sufficiency_lhs");
  if (a == 0.0) return 2.0;
  const double ln2 = std::numbers::ln2;
  const double r1 = std::sqrt(a * a + 1.0);
  const double s = std::sqrt(a * a + 2.0);
  // int_0^1 of a / (a + sqrt(a^2 + g)) and a / (a + sqrt(a^2 + g(1+g))).
  const double j1 = 2.0 * (r1 - a - a * std::log((a + r1) / (2.0 * a)));
  const double j2 = std::log((1.5 + s) / (0.5 + a)) - 2.0 * a * std::atanh(3.0 * a / s) +
                    a * ln2 + 2.0 * a * std::atanh(8.0 * a * a - 1.0);
  return 2.0 - 2.0 * a * (j1 + j2);
}

double sufficiency_lhs_quadrature(double a) {
  require_a(a, "sufficiency_lhs_quadrature");
  const auto term = [a](double t) {
    const double d = a + std::sqrt(a * a + t);
    return t / (d * d);
  };
  QuadratureSpec spec;
  spec.rel_tol = 1e-12;
  spec.abs_tol = 1e-15;
  // g = s^2 removes the sqrt(g) behaviour; what is left bends on s ~ a.
  const ScalarFn f = [&](double s) {
    const double g = s * s;
    return 2.0 * s * (term(g) + term(g * (1.0 + g)));
  };
  const double knee = std::min(0.5, 20.0 * a);
  if (knee == 0.0) return integrate(f, 0.0, 1.0, spec);
  return integrate(f, 0.0, knee, spec) + integrate(f, knee, 1.0, spec);
}

double sufficiency_check(int n) {
  require_dimension(n, "sufficiency_check");
  return sufficiency_lhs((n - 1.0) / (2.0 * n));
}

ThresholdResult solve_sufficiency_a(const RootSpec& spec) {
  ThresholdResult result = solve_bracketed(
      [](double a) { return sufficiency_lhs(a) - 1.0; }, 0.05, 0.45, spec,
      [](double a) { return sufficiency_lhs(a) - 1.0; });
  result.method = ThresholdMethod::SufficiencyA;
  return result;
}

double sufficiency_dimension(double a) {
  require_a(a, "sufficiency_dimension");
  return 1.0 / (1.0 - 2.0 * a);
}

// ------------------------------------------------------------ MMSE threshold

double mmse_condition_lhs(int n, double radius, const ExpectationEngine& engine) {
  require_dimension(n, "mmse_condition_lhs");
  require_radius(radius, "mmse_condition_lhs");
  return mean_h2(n, radius, 0.0, engine) + mean_h2(n, radius, radius * radius, engine);
}

ThresholdResult solve_rbar_mmse(int n, const RootSpec& spec,
                                const ExpectationEngine& engine) {
  require_dimension(n, "solve_rbar_mmse");
  const double root_n = std::sqrt(static_cast<double>(n));
  const ExpectationEngine coarse = scan_engine(engine);
  ThresholdResult result = solve_bracketed(
      [&](double r) { return mmse_condition_lhs(n, r, engine) - 1.0; },
      0.7 * root_n, 1.8 * root_n, spec,
      [&](double r) { return mmse_condition_lhs(n, r, coarse) - 1.0; });
  result.n = n;
  result.method = ThresholdMethod::MmseCondition;
  return result;
}

double mmse_limit_constant() {
  const double root69 = std::sqrt(69.0);
  return std::sqrt(std::cbrt(9.0 - root69) + std::cbrt(9.0 + root69)) /
         (std::pow(2.0, 1.0 / 6.0) * std::cbrt(3.0));
}

}  // namespace spherecap
