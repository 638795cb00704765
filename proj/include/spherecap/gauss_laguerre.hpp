#pragma once

#include <vector>

namespace spherecap {

/// Gauss rule for the Gamma(alpha + 1, 1) law: weights sum to one, so
/// sum_i weights[i] * f(nodes[i]) approximates E[f(T)], T ~ Gamma(alpha+1).
struct GammaRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Generalized Gauss-Laguerre rule with `points` nodes for weight
/// t^alpha e^{-t}, alpha = two_alpha / 2 (> -1), normalized to a probability
/// rule. Built by Golub-Welsch and memoized per thread.
const GammaRule& gamma_rule(int two_alpha, int points);

}  // namespace spherecap
