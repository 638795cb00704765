#pragma once

// Named numerical self-checks backing `spherecap verify`.

#include <string>
#include <vector>

#include "spherecap/expect.hpp"

namespace spherecap {

enum class VerifyLevel { Fast, Full };

struct CheckResult {
  std::string name;
  double tolerance;
  double observed;
  bool pass;
};

/// Fast: identity suite for n in {1, 2, 3} plus the closed-form constants.
/// Full: adds threshold cross-checks and Monte Carlo (10^7 samples) oracle
/// comparisons at four standard errors. Exceptions inside a check are
/// reported as a failed check named after it.
std::vector<CheckResult> run_verification(VerifyLevel level);

}  // namespace spherecap
