#pragma once

// Threshold radii for the single-sphere input: the capacity threshold
// Rbar_n (integral condition, alternative expectation condition, and the
// n = 1 tanh form), its large-n constant c, the sufficiency constant a for
// R <= sqrt(n), and the MMSE (least favorable prior) threshold.

#include <functional>
#include <string_view>

#include "spherecap/expect.hpp"

namespace spherecap {

enum class ThresholdMethod {
  MainIntegral,
  AltExpectation,
  N1Tanh,
  AsymptoticC,
  MmseCondition,
  SufficiencyA,
};

std::string_view to_string(ThresholdMethod method);

struct ThresholdResult {
  int n = 0;
  double value = 0.0;
  /// Defining-equation residual at `value`.
  double residual = 0.0;
  double bracket_lo = 0.0;
  double bracket_hi = 0.0;
  /// Residual evaluations spent by the solver (scan excluded).
  int iterations = 0;
  ThresholdMethod method = ThresholdMethod::MainIntegral;
  /// Set when the pre-scan saw more than one sign change; the largest
  /// crossing is returned.
  bool multiple_roots = false;
};

struct RootSpec {
  double xtol = 1e-10;
  double ftol = 1e-9;
  int max_iter = 200;
  /// Points of the sign-change scan over the bracket; 0 disables it.
  int scan_points = 64;
  /// Bracket width below which bisection hands over to secant steps.
  double polish_width = 1e-3;

  void validate() const;
};

/// Bracketed root of `residual` on [lo, hi]: bisection to polish_width, then
/// safeguarded secant. `scan` (cheaper approximation of the residual, may be
/// empty) is sampled on scan_points to detect multiple crossings and to
/// narrow the bracket. Throws NoBracketError when no sign change is found.
ThresholdResult solve_bracketed(const std::function<double(double)>& residual,
                                double lo, double hi, const RootSpec& spec,
                                const std::function<double(double)>& scan = {});

/// int_0^1 E[h^2(sqrt(g) R ||Z||)] + E[h^2(sqrt(g) R ||sqrt(g) x + Z||)] dg
/// with ||x|| = R and h = h_{n/2}.
double capacity_condition_lhs(int n, double radius, const ExpectationEngine& engine);
/// Root of capacity_condition_lhs = 1 on [0.8 sqrt(n), 2.6 sqrt(n)].
ThresholdResult solve_rbar(int n, const RootSpec& spec, const ExpectationEngine& engine);

/// E[(W_1 / ||W||) h_{n/2}(R ||W||)] for the BoxcarGaussianLaw(n, R).
double alt_condition_lhs(int n, double radius, const ExpectationEngine& engine);
/// Root of alt_condition_lhs = 1/2 on [0.8 sqrt(n), 2.6 sqrt(n)].
ThresholdResult solve_rbar_alt(int n, const RootSpec& spec,
                               const ExpectationEngine& engine);

/// (1/R) int (Q(w - R) - Q(w)) tanh(R w) dw, by direct 1-D quadrature.
double n1_tanh_lhs(double radius, const QuadratureSpec& spec = {});
/// Nonzero root of n1_tanh_lhs = 1/2 on [1, 2.2].
ThresholdResult solve_rbar_n1_tanh(const RootSpec& spec,
                                   const QuadratureSpec& quad = {});

/// Large-n limit of the capacity condition with R = c sqrt(n):
/// int_0^1 g c^2 / (1/2 + sqrt(1/4 + g c^2))^2
///       + g c^2 (1 + g c^2) / (1/2 + sqrt(1/4 + g c^2 (1 + g c^2)))^2 dg.
double asymptotic_lhs_quadrature(double c);
/// Closed form of the same integral.
double asymptotic_lhs_closed_form(double c);
/// Closed form, after checking it against quadrature (InternalDisagreementError
/// beyond 1e-8).
double asymptotic_lhs(double c);
/// Root of asymptotic_lhs = 1 on [1, 3].
ThresholdResult solve_c(const RootSpec& spec);

/// Jensen-tightened sufficient condition at c = 1 as a function of
/// a = (n-1)/(2n) in [0, 1/2): closed form with log and atanh terms.
double sufficiency_lhs(double a);
/// Same quantity by direct quadrature over the SNR fraction.
double sufficiency_lhs_quadrature(double a);
/// sufficiency_lhs((n-1)/(2n)); R <= sqrt(n) is sufficient when <= 1.
double sufficiency_check(int n);
/// Root of sufficiency_lhs = 1 on [0.05, 0.45].
ThresholdResult solve_sufficiency_a(const RootSpec& spec);
/// Dimension n with (n-1)/(2n) = a, i.e. 1 / (1 - 2a).
double sufficiency_dimension(double a);

/// E[h^2_{n/2}(R ||Z||)] + E[h^2_{n/2}(R ||x + Z||)], ||x|| = R.
double mmse_condition_lhs(int n, double radius, const ExpectationEngine& engine);
/// Root of mmse_condition_lhs = 1 on [0.7 sqrt(n), 1.8 sqrt(n)].
ThresholdResult solve_rbar_mmse(int n, const RootSpec& spec,
                                const ExpectationEngine& engine);

/// Exact large-n limit of Rbar_n^MMSE / sqrt(n).
double mmse_limit_constant();

}  // namespace spherecap
