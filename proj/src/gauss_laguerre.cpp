#include "spherecap/gauss_laguerre.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <map>
#include <utility>

#include "spherecap/errors.hpp"

namespace spherecap {

namespace {

GammaRule build_rule(double alpha, int points) {
  // Jacobi matrix of the monic generalized Laguerre recurrence.
  Eigen::VectorXd diag(points);
  Eigen::VectorXd sub(points > 1 ? points - 1 : 1);
  for (int i = 0; i < points; ++i) diag[i] = 2.0 * i + alpha + 1.0;
  for (int i = 1; i < points; ++i) sub[i - 1] = std::sqrt(i * (i + alpha));

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
  solver.computeFromTridiagonal(diag, sub.head(points - 1),
                                Eigen::ComputeEigenvectors);
  if (solver.info() != Eigen::Success) {
    throw NonConvergenceError("gamma_rule: tridiagonal eigensolver failed", 0.0,
                              0.0);
  }

  GammaRule rule;
  rule.nodes.resize(points);
  rule.weights.resize(points);
  double total = 0.0;
  for (int i = 0; i < points; ++i) {
    rule.nodes[i] = solver.eigenvalues()[i];
    const double v0 = solver.eigenvectors()(0, i);
    rule.weights[i] = v0 * v0;
    total += rule.weights[i];
  }
  for (double& w : rule.weights) w /= total;
  return rule;
}

}  // namespace

const GammaRule& gamma_rule(int two_alpha, int points) {
  if (two_alpha <= -2) throw DomainError("gamma_rule: alpha must be > -1");
  if (points < 1) throw DomainError("gamma_rule: need at least one node");
  thread_local std::map<std::pair<int, int>, GammaRule> cache;
  const auto key = std::make_pair(two_alpha, points);
  auto it = cache.find(key);
  if (it == cache.end()) {
    it = cache.emplace(key, build_rule(0.5 * two_alpha, points)).first;
  }
  return it->second;
}

}  // namespace spherecap
