#include "commands.hpp"

#include <fmt/format.h>
#include <fmt/ostream.h>

#include <CLI11.hpp>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <iostream>
#include <numbers>
#include <thread>
#include <utility>

#include "spherecap/channel.hpp"
#include "spherecap/expect.hpp"
#include "spherecap/thresholds.hpp"

namespace spherecap::cli {

namespace {

std::string num(double x) { return fmt::format("{:.12g}", x); }

std::string_view command_name(Command c) {
  switch (c) {
    case Command::Solve: return "solve";
    case Command::Table: return "table";
    case Command::MmseTable: return "mmse-table";
    case Command::Profile: return "profile";
    case Command::MmseCurve: return "mmse-curve";
    case Command::Verify: return "verify";
    case Command::Asymptotic: return "asymptotic";
  }
  return "unknown";
}

std::string_view condition_name(Condition c) {
  switch (c) {
    case Condition::Main: return "main";
    case Condition::Alt: return "alt";
    case Condition::Tanh: return "tanh";
    case Condition::Mmse: return "mmse";
  }
  return "unknown";
}

struct NamedEngine {
  std::string name;
  ExpectationEngine engine;
};

QuadratureSpec quadrature_spec(const RunConfig& config) {
  QuadratureSpec spec;
  spec.rel_tol = config.rel_tol;
  spec.abs_tol = std::min(spec.abs_tol, config.rel_tol * 1e-2);
  return spec;
}

std::vector<NamedEngine> make_engines(const RunConfig& config) {
  std::vector<NamedEngine> engines;
  const QuadratureSpec spec = quadrature_spec(config);
  if (config.method != EngineChoice::Mc) engines.push_back({"quad", ExpectationEngine(spec)});
  if (config.method != EngineChoice::Quad) {
    McSpec mc;
    mc.seed = *config.seed;
    mc.samples = config.samples;
    engines.push_back({"mc", ExpectationEngine(mc, spec)});
  }
  return engines;
}

void write_metadata(std::ostream& out, const RunConfig& config,
                    const std::vector<NamedEngine>& engines) {
  std::string line = fmt::format("# spherecap {}; command={}; base={}", kToolVersion,
                                 command_name(config.command),
                                 config.base == Base::Bits ? "bits" : "nats");
  for (const auto& e : engines) line += "; " + e.engine.describe();
  out << line << '\n';
}

std::string csv_field(const std::string& text) {
  if (text.find_first_of(",\"\r\n") == std::string::npos) return text;
  std::string quoted = "\"";
  for (char ch : text) {
    if (ch == '"') quoted += '"';
    quoted += ch;
  }
  return quoted + '"';
}

struct Row {
  Row() = default;
  Row(std::vector<std::string> c) : cells(std::move(c)) {}

  std::vector<std::string> cells;
  std::string note;  // goes to the `error` column
  bool failed = false;
};

// Writes header and rows; an `error` column is appended only when some row
// carries a note. Returns 1 if any row failed.
int write_rows(std::ostream& out, const std::vector<std::string>& header,
               const std::vector<Row>& rows, std::ostream& err) {
  const bool with_error =
      std::any_of(rows.begin(), rows.end(), [](const Row& r) { return !r.note.empty(); });
  auto write_line = [&](const std::vector<std::string>& cells, const std::string* note) {
    std::string line;
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) line += ',';
      line += csv_field(cells[i]);
    }
    if (with_error) line += "," + (note ? csv_field(*note) : std::string("error"));
    out << line << '\n';
  };
  write_line(header, nullptr);
  int status = 0;
  for (const Row& row : rows) {
    std::vector<std::string> cells = row.cells;
    cells.resize(header.size());
    write_line(cells, &row.note);
    if (row.failed) {
      status = 1;
      err << "row failed: " << row.note << '\n';
    }
  }
  return status;
}

// Evaluates fn(0..count-1) on a worker pool; results keep index order.
template <typename Fn>
std::vector<Row> parallel_rows(std::size_t count, Fn fn) {
  std::vector<Row> rows(count);
  std::atomic<std::size_t> next{0};
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(hw, count));
  {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i; (i = next.fetch_add(1)) < count;) {
          try {
            rows[i] = fn(i);
          } catch (const std::exception& e) {
            rows[i].failed = true;
            rows[i].note = e.what();
          }
        }
      });
    }
  }
  return rows;
}

std::vector<int> dimensions(const RunConfig& config) {
  std::vector<int> ns;
  for (int n = config.n_min; n <= config.n_max; ++n) ns.push_back(n);
  return ns;
}

ThresholdResult solve_condition(Condition condition, int n, const ExpectationEngine& engine,
                                const RootSpec& roots) {
  switch (condition) {
    case Condition::Main: return solve_rbar(n, roots, engine);
    case Condition::Alt: return solve_rbar_alt(n, roots, engine);
    case Condition::Tanh: return solve_rbar_n1_tanh(roots, engine.quadrature());
    case Condition::Mmse: return solve_rbar_mmse(n, roots, engine);
  }
  throw std::logic_error("unknown condition");
}

void note_multiple_roots(Row& row, const ThresholdResult& r) {
  if (r.multiple_roots) row.note = "multiple sign changes on scan; largest root reported";
}

int cmd_solve(const RunConfig& config, std::ostream& out, std::ostream& err) {
  const auto engines = make_engines(config);
  const auto ns = dimensions(config);
  write_metadata(out, config, engines);
  const RootSpec roots;
  auto rows = parallel_rows(ns.size() * engines.size(), [&](std::size_t i) {
    const int n = ns[i / engines.size()];
    const NamedEngine& e = engines[i % engines.size()];
    const ThresholdResult r = solve_condition(config.condition, n, e.engine, roots);
    Row row{{std::to_string(n), std::string(condition_name(config.condition)), e.name,
             num(r.value), num(r.residual), num(r.bracket_lo), num(r.bracket_hi),
             std::to_string(r.iterations), r.multiple_roots ? "1" : "0"}};
    note_multiple_roots(row, r);
    return row;
  });
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].failed) {
      rows[i].cells = {std::to_string(ns[i / engines.size()]),
                       std::string(condition_name(config.condition)),
                       engines[i % engines.size()].name};
    }
  }
  return write_rows(out,
                    {"n", "condition", "method", "value", "residual", "bracket_lo",
                     "bracket_hi", "iterations", "multiple_roots"},
                    rows, err);
}

int cmd_table(const RunConfig& config, std::ostream& out, std::ostream& err) {
  const auto engines = make_engines(config);
  const auto ns = dimensions(config);
  write_metadata(out, config, engines);
  const RootSpec roots;
  auto rows = parallel_rows(ns.size() * engines.size(), [&](std::size_t i) {
    const int n = ns[i / engines.size()];
    const NamedEngine& e = engines[i % engines.size()];
    const ThresholdResult r = solve_rbar(n, roots, e.engine);
    const double root_n = std::sqrt(static_cast<double>(n));
    Row row{{std::to_string(n), num(r.value), num(r.value / root_n), num(root_n),
             num(r.residual), e.name, std::to_string(r.iterations)}};
    note_multiple_roots(row, r);
    return row;
  });
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].failed) {
      const int n = ns[i / engines.size()];
      rows[i].cells = {std::to_string(n), "", "", num(std::sqrt(static_cast<double>(n))), "",
                       engines[i % engines.size()].name, ""};
    }
  }
  return write_rows(
      out, {"n", "rbar", "rbar_over_sqrt_n", "sqrt_n", "residual", "method", "iterations"},
      rows, err);
}

int cmd_mmse_table(const RunConfig& config, std::ostream& out, std::ostream& err) {
  const auto engines = make_engines(config);
  const ExpectationEngine& engine = engines.front().engine;
  const auto ns = dimensions(config);
  write_metadata(out, config, engines);
  const RootSpec roots;
  auto rows = parallel_rows(ns.size(), [&](std::size_t i) {
    const int n = ns[i];
    const double rbar = solve_rbar(n, roots, engine).value;
    const double rbar_mmse = solve_rbar_mmse(n, roots, engine).value;
    Row row{{std::to_string(n), num(rbar), num(rbar_mmse),
             num(std::sqrt(static_cast<double>(n)))}};
    if (!(rbar_mmse < rbar)) {
      row.failed = true;
      row.note = "ordering rbar_mmse < rbar violated";
    }
    return row;
  });
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].failed && rows[i].cells.empty()) {
      rows[i].cells = {std::to_string(ns[i]), "", "",
                       num(std::sqrt(static_cast<double>(ns[i])))};
    }
  }
  return write_rows(out, {"n", "rbar", "rbar_mmse", "sqrt_n"}, rows, err);
}

int cmd_profile(const RunConfig& config, std::ostream& out, std::ostream& err) {
  const auto engines = make_engines(config);
  const ExpectationEngine& engine = engines.front().engine;
  const ChannelSpec spec(config.n_min, config.radii.front());
  const double scale = config.base == Base::Bits ? 1.0 / std::numbers::ln2 : 1.0;
  const int points = config.grid;
  write_metadata(out, config, engines);

  std::vector<double> grid(points);
  for (int i = 0; i < points; ++i) {
    grid[i] = i == points - 1 ? spec.radius()
                              : spec.radius() * static_cast<double>(i) / (points - 1);
  }
  std::vector<double> values(points);
  auto rows = parallel_rows(points, [&](std::size_t i) {
    values[i] = info_density(spec, grid[i], engine) * scale;
    return Row{};
  });
  for (const Row& row : rows) {
    if (row.failed) {
      err << "profile failed: " << row.note << '\n';
      return 1;
    }
  }
  const double at_radius = values.back();
  std::vector<Row> out_rows;
  for (int i = 0; i < points; ++i) {
    out_rows.push_back({{num(grid[i]), num(values[i]), num(at_radius - values[i])}});
  }
  return write_rows(out, {"xnorm", "i_x", "i_R_minus_i_x"}, out_rows, err);
}

int cmd_mmse_curve(const RunConfig& config, std::ostream& out, std::ostream& err) {
  const auto engines = make_engines(config);
  const ExpectationEngine& engine = engines.front().engine;
  const int n = config.n_min;
  write_metadata(out, config, engines);
  auto rows = parallel_rows(config.radii.size(), [&](std::size_t i) {
    const double radius = config.radii[i];
    const double sphere = mmse_at_snr(ChannelSpec(n, radius), SnrFraction(1.0), engine);
    const double gaussian = mmse_gaussian_reference(n, radius);
    Row row{{num(radius), num(sphere), num(gaussian)}};
    const double slack = 1e-12 * radius * radius;
    if (!(sphere <= gaussian + slack && gaussian <= radius * radius + slack)) {
      row.failed = true;
      row.note = "ordering mmse_sphere <= mmse_gaussian <= R^2 violated";
    }
    return row;
  });
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].failed && rows[i].cells.empty()) rows[i].cells = {num(config.radii[i])};
  }
  return write_rows(out, {"R", "mmse_sphere", "mmse_gaussian"}, rows, err);
}

int cmd_verify(const RunConfig& config, std::ostream& out, std::ostream& err) {
  out << fmt::format("# spherecap {}; command=verify; level={}\n", kToolVersion,
                     config.level == VerifyLevel::Full ? "full" : "fast");
  out << "check,tolerance,observed,pass\n";
  int status = 0;
  for (const CheckResult& c : run_verification(config.level)) {
    out << csv_field(c.name) << ',' << num(c.tolerance) << ',' << num(c.observed) << ','
        << (c.pass ? "1" : "0") << '\n';
    if (!c.pass) {
      status = 1;
      err << "check failed: " << c.name << '\n';
    }
  }
  return status;
}

int cmd_asymptotic(const RunConfig& config, std::ostream& out, std::ostream& err) {
  out << fmt::format("# spherecap {}; command=asymptotic\n", kToolVersion);
  (void)config;
  (void)err;
  const RootSpec roots;
  const ThresholdResult c = solve_c(roots);
  const ThresholdResult a = solve_sufficiency_a(roots);
  out << "quantity,value,residual\n";
  out << "c," << num(c.value) << ',' << num(c.residual) << '\n';
  out << "a," << num(a.value) << ',' << num(a.residual) << '\n';
  out << "n_sufficiency," << num(sufficiency_dimension(a.value)) << ",\n";
  out << "mmse_limit," << num(mmse_limit_constant()) << ",\n";
  return 0;
}

}  // namespace

std::pair<int, int> parse_n_range(const std::string& text, int max_n) {
  const auto sep = text.find("..");
  if (sep == std::string::npos) throw UsageError("--n-range must look like A..B");
  int lo = 0;
  int hi = 0;
  try {
    std::size_t used_lo = 0;
    std::size_t used_hi = 0;
    lo = std::stoi(text.substr(0, sep), &used_lo);
    hi = std::stoi(text.substr(sep + 2), &used_hi);
    if (used_lo != sep || used_hi != text.size() - sep - 2) throw std::invalid_argument("");
  } catch (const std::logic_error&) {
    throw UsageError("--n-range must look like A..B with integers A, B");
  }
  if (lo > hi) throw UsageError("--n-range is empty");
  if (lo < 1 || hi > max_n) {
    throw UsageError(fmt::format("--n-range must lie within 1..{}", max_n));
  }
  return {lo, hi};
}

std::vector<double> parse_radius_list(const std::string& text, int points) {
  auto parse_one = [](const std::string& s) {
    std::size_t used = 0;
    double value = 0.0;
    try {
      value = std::stod(s, &used);
    } catch (const std::logic_error&) {
      throw UsageError("--radius: cannot parse '" + s + "'");
    }
    if (used != s.size()) throw UsageError("--radius: cannot parse '" + s + "'");
    if (!(value > 0.0) || std::isinf(value)) throw UsageError("--radius values must be > 0");
    return value;
  };
  std::vector<double> radii;
  if (const auto sep = text.find(".."); sep != std::string::npos) {
    const double lo = parse_one(text.substr(0, sep));
    const double hi = parse_one(text.substr(sep + 2));
    if (lo > hi) throw UsageError("--radius range is empty");
    if (points < 2 || lo == hi) return {lo};
    for (int i = 0; i < points; ++i) {
      radii.push_back(i == points - 1 ? hi : lo + (hi - lo) * i / (points - 1));
    }
    return radii;
  }
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    const std::string item =
        text.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    radii.push_back(parse_one(item));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return radii;
}

std::optional<RunConfig> parse_args(int argc, const char* const* argv, std::ostream& out) {
  CLI::App app{"Single-sphere capacity and MMSE thresholds for the amplitude-constrained "
               "Gaussian channel",
               "spherecap"};
  app.require_subcommand(1);

  int n = 0;
  std::string n_range;
  std::string radius;
  std::string method = "quad";
  std::uint64_t seed = 0;
  std::int64_t samples = 100'000;
  double rel_tol = 1e-10;
  int grid = -1;
  std::string base = "nats";
  std::string out_path;
  std::string level = "fast";
  std::string condition = "main";

  std::vector<CLI::Option*> n_opts;
  std::vector<CLI::Option*> range_opts;
  std::vector<CLI::Option*> seed_opts;
  std::vector<CLI::Option*> radius_opts;
  std::vector<CLI::Option*> grid_opts;

  auto add_engine = [&](CLI::App* sub) {
    sub->add_option("--method", method, "Expectation method")
        ->check(CLI::IsMember({"quad", "mc", "both"}));
    seed_opts.push_back(sub->add_option("--seed", seed, "Monte Carlo seed"));
    sub->add_option("--samples", samples, "Monte Carlo samples per expectation")
        ->check(CLI::Range(std::int64_t{1000}, std::int64_t{1} << 40));
    sub->add_option("--rel-tol", rel_tol, "Relative quadrature tolerance")
        ->check(CLI::PositiveNumber);
  };
  auto add_out = [&](CLI::App* sub) {
    sub->add_option("--out", out_path, "Output path (default: standard output)");
  };
  auto add_n = [&](CLI::App* sub, bool allow_range) {
    n_opts.push_back(sub->add_option("--n", n, "Dimension")->check(CLI::Range(1, 64)));
    if (allow_range) {
      range_opts.push_back(sub->add_option("--n-range", n_range, "Dimension range A..B"));
    }
  };

  CLI::App* solve = app.add_subcommand("solve", "Solve one threshold characterization");
  add_n(solve, true);
  add_engine(solve);
  add_out(solve);
  solve->add_option("--condition", condition, "Threshold equation")
      ->check(CLI::IsMember({"main", "alt", "tanh", "mmse"}));

  CLI::App* table = app.add_subcommand("table", "Rbar_n over a range of dimensions");
  add_n(table, true);
  add_engine(table);
  add_out(table);

  CLI::App* mmse_table =
      app.add_subcommand("mmse-table", "Rbar_n and Rbar_n^MMSE over a range of dimensions");
  add_n(mmse_table, true);
  add_engine(mmse_table);
  add_out(mmse_table);

  CLI::App* profile = app.add_subcommand("profile", "Information density over [0, R]");
  add_n(profile, false);
  add_engine(profile);
  add_out(profile);
  radius_opts.push_back(profile->add_option("--radius", radius, "Sphere radius"));
  grid_opts.push_back(profile->add_option("--grid", grid, "Grid points (>= 16)"));
  profile->add_option("--base", base, "Logarithm base")->check(CLI::IsMember({"nats", "bits"}));

  CLI::App* curve = app.add_subcommand("mmse-curve", "MMSE of the sphere vs the Gaussian input");
  add_n(curve, false);
  add_engine(curve);
  add_out(curve);
  radius_opts.push_back(
      curve->add_option("--radius", radius, "Radii: x1,x2,... or A..B (with --grid points)"));
  grid_opts.push_back(curve->add_option("--grid", grid, "Points for a radius range"));

  CLI::App* verify = app.add_subcommand("verify", "Run the numerical self-checks");
  verify->add_option("--level", level, "fast or full")
      ->check(CLI::IsMember({"fast", "full"}));
  add_out(verify);

  CLI::App* asymptotic =
      app.add_subcommand("asymptotic", "Print c, a, the implied dimension and the MMSE limit");
  add_out(asymptotic);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return std::nullopt;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return std::nullopt;
  } catch (const CLI::ParseError& e) {
    throw UsageError(e.what());
  }

  auto given = [](const std::vector<CLI::Option*>& opts) {
    return std::any_of(opts.begin(), opts.end(), [](const CLI::Option* o) { return o->count() > 0; });
  };

  RunConfig config;
  config.out_path = out_path;
  config.rel_tol = rel_tol;
  config.samples = samples;
  config.method = method == "mc" ? EngineChoice::Mc
                                 : method == "both" ? EngineChoice::Both : EngineChoice::Quad;
  config.base = base == "bits" ? Base::Bits : Base::Nats;
  config.level = level == "full" ? VerifyLevel::Full : VerifyLevel::Fast;
  config.condition = condition == "alt"    ? Condition::Alt
                     : condition == "tanh" ? Condition::Tanh
                     : condition == "mmse" ? Condition::Mmse
                                           : Condition::Main;
  if (given(seed_opts)) config.seed = seed;
  if (config.method != EngineChoice::Quad && !config.seed) {
    throw UsageError("--method mc and --method both require --seed");
  }

  const bool has_n = given(n_opts);
  const bool has_range = given(range_opts);
  if (has_n && has_range) throw UsageError("--n and --n-range are mutually exclusive");

  if (app.got_subcommand(solve) || app.got_subcommand(table) || app.got_subcommand(mmse_table)) {
    config.command = app.got_subcommand(solve)   ? Command::Solve
                     : app.got_subcommand(table) ? Command::Table
                                                 : Command::MmseTable;
    if (!has_n && !has_range) throw UsageError("--n or --n-range is required");
    if (has_range) {
      std::tie(config.n_min, config.n_max) = parse_n_range(n_range);
    } else {
      config.n_min = config.n_max = n;
    }
    if (config.command == Command::MmseTable && config.method == EngineChoice::Both) {
      throw UsageError("mmse-table takes a single --method");
    }
    if (config.command == Command::Solve && config.condition == Condition::Tanh &&
        !(config.n_min == 1 && config.n_max == 1)) {
      throw UsageError("--condition tanh applies only to n = 1");
    }
  } else if (app.got_subcommand(profile) || app.got_subcommand(curve)) {
    const bool is_profile = app.got_subcommand(profile);
    config.command = is_profile ? Command::Profile : Command::MmseCurve;
    if (!has_n) throw UsageError("--n is required");
    config.n_min = config.n_max = n;
    if (!given(radius_opts)) throw UsageError("--radius is required");
    if (config.method == EngineChoice::Both) throw UsageError("this command takes a single --method");
    if (is_profile) {
      config.grid = grid < 0 ? 64 : grid;
      if (config.grid < 16) throw UsageError("--grid must be >= 16");
      config.radii = parse_radius_list(radius, 1);
      if (config.radii.size() != 1) throw UsageError("profile takes a single --radius");
    } else {
      config.grid = grid < 0 ? 32 : grid;
      if (config.grid < 1) throw UsageError("--grid must be >= 1");
      config.radii = parse_radius_list(radius, config.grid);
    }
  } else if (app.got_subcommand(verify)) {
    config.command = Command::Verify;
  } else {
    config.command = Command::Asymptotic;
  }
  return config;
}

int execute(const RunConfig& config, std::ostream& out, std::ostream& err) {
  switch (config.command) {
    case Command::Solve: return cmd_solve(config, out, err);
    case Command::Table: return cmd_table(config, out, err);
    case Command::MmseTable: return cmd_mmse_table(config, out, err);
    case Command::Profile: return cmd_profile(config, out, err);
    case Command::MmseCurve: return cmd_mmse_curve(config, out, err);
    case Command::Verify: return cmd_verify(config, out, err);
    case Command::Asymptotic: return cmd_asymptotic(config, out, err);
  }
  return 1;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  std::optional<RunConfig> config;
  try {
    config = parse_args(argc, argv, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return 2;
  }
  if (!config) return 0;

  try {
    if (config->out_path.empty()) return execute(*config, out, err);
    std::ofstream file(config->out_path, std::ios::binary);
    if (!file) {
      err << "cannot open " << config->out_path << " for writing\n";
      return 1;
    }
    const int status = execute(*config, file, err);
    file.flush();
    if (!file) {
      err << "write to " << config->out_path << " failed\n";
      return 1;
    }
    return status;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace spherecap::cli
