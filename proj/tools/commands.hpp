#pragma once

// Command-line front end: argument parsing into a RunConfig and execution of
// each command as CSV on an output stream.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "spherecap/verify.hpp"

namespace spherecap::cli {

inline constexpr const char* kToolVersion = "1.0.0";

enum class Command { Solve, Table, MmseTable, Profile, MmseCurve, Verify, Asymptotic };
enum class EngineChoice { Quad, Mc, Both };
enum class Base { Nats, Bits };
enum class Condition { Main, Alt, Tanh, Mmse };

struct RunConfig {
  Command command = Command::Solve;
  int n_min = 1;
  int n_max = 1;
  std::vector<double> radii;
  EngineChoice method = EngineChoice::Quad;
  std::optional<std::uint64_t> seed;
  std::int64_t samples = 100'000;
  double rel_tol = 1e-10;
  int grid = 64;
  Base base = Base::Nats;
  std::string out_path;  // empty: standard output
  VerifyLevel level = VerifyLevel::Fast;
  Condition condition = Condition::Main;
};

/// Invalid flags or flag combinations; maps to exit code 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// "A..B" with 1 <= A <= B <= max_n.
std::pair<int, int> parse_n_range(const std::string& text, int max_n = 64);
/// "x1,x2,..." or "A..B" (sampled at `points` evenly spaced values).
std::vector<double> parse_radius_list(const std::string& text, int points);

/// Parses argv. Returns nullopt after printing help to `out`.
std::optional<RunConfig> parse_args(int argc, const char* const* argv, std::ostream& out);

/// Runs one command, writing CSV to `out` and diagnostics to `err`.
/// Returns 0 on success and 1 on numeric or verification failure.
int execute(const RunConfig& config, std::ostream& out, std::ostream& err);

/// parse_args + execute with --out handling; returns the process exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace spherecap::cli
