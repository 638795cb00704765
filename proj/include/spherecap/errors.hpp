#pragma once

#include <stdexcept>
#include <string>

namespace spherecap {

/// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A quadrature or iteration failed to reach its tolerance within budget.
class NonConvergenceError : public std::runtime_error {
 public:
  NonConvergenceError(const std::string& what, double estimate, double error)
      : std::runtime_error(what), estimate_(estimate), error_(error) {}

  double estimate() const noexcept { return estimate_; }
  double error() const noexcept { return error_; }

 private:
  double estimate_;
  double error_;
};

/// Root bracket endpoints do not straddle a sign change.
class NoBracketError : public std::runtime_error {
 public:
  NoBracketError(const std::string& what, double f_lo, double f_hi)
      : std::runtime_error(what), f_lo_(f_lo), f_hi_(f_hi) {}

  double f_lo() const noexcept { return f_lo_; }
  double f_hi() const noexcept { return f_hi_; }

 private:
  double f_lo_;
  double f_hi_;
};

/// Two independent evaluation routes of the same quantity disagree.
class InternalDisagreementError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace spherecap
