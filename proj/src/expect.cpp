#include "spherecap/expect.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <locale>
#include <numbers>
#include <sstream>
#include <thread>

#include "spherecap/errors.hpp"
#include "spherecap/gauss_laguerre.hpp"
#include "spherecap/specfun.hpp"

namespace spherecap {

// ------------------------------------------------------------------- types

NoncentralChiSquare::NoncentralChiSquare(int dof, double noncentrality)
    : dof_(dof), noncentrality_(noncentrality) {
  if (dof < 1) throw DomainError("NoncentralChiSquare: dof must be >= 1");
  if (!(noncentrality >= 0.0) || std::isinf(noncentrality)) {
    throw DomainError("NoncentralChiSquare: noncentrality must be finite and >= 0");
  }
}

void QuadratureSpec::validate() const {
  if (!(rel_tol > 0.0) || !(abs_tol > 0.0)) {
    throw DomainError("QuadratureSpec: tolerances must be positive");
  }
  if (max_nodes < 15) throw DomainError("QuadratureSpec: max_nodes must be >= 15");
  if (min_nodes < 1 || min_nodes > max_nodes) {
    throw DomainError("QuadratureSpec: need 1 <= min_nodes <= max_nodes");
  }
  if (!(poisson_trunc_mass > 0.0) || !(poisson_trunc_mass < 1.0)) {
    throw DomainError("QuadratureSpec: poisson_trunc_mass must be in (0, 1)");
  }
  if (!(radial_trunc_sigmas > 0.0)) {
    throw DomainError("QuadratureSpec: radial_trunc_sigmas must be positive");
  }
}

QuadratureSpec QuadratureSpec::refined() const {
  QuadratureSpec out = *this;
  out.rel_tol = rel_tol / 10.0;
  out.abs_tol = abs_tol / 10.0;
  out.min_nodes = 2 * min_nodes;
  out.max_nodes = 2 * max_nodes;
  return out;
}

void McSpec::validate() const {
  if (samples < 1000) throw DomainError("McSpec: samples must be >= 1000");
}

BoxcarGaussianLaw::BoxcarGaussianLaw(int n, double radius) : n_(n), radius_(radius) {
  if (n < 1) throw DomainError("BoxcarGaussianLaw: n must be >= 1");
  if (!(radius > 0.0) || std::isinf(radius)) {
    throw DomainError("BoxcarGaussianLaw: radius must be finite and > 0");
  }
}

double BoxcarGaussianLaw::w1_density(double w) const {
  using specfun::gaussian_tail_q;
  // Difference of the two tails that are small at w, to avoid cancellation.
  if (w >= 0.5 * radius_) {
    return (gaussian_tail_q(w - radius_) - gaussian_tail_q(w)) / radius_;
  }
  return (gaussian_tail_q(-w) - gaussian_tail_q(radius_ - w)) / radius_;
}

double BoxcarGaussianLaw::w1_cdf(double w) const {
  // (1/R) * int_{w-R}^{w} Phi(t) dt with int Phi = t Phi(t) + phi(t).
  const auto antiderivative = [](double t) {
    const double phi = std::exp(-0.5 * t * t) / std::sqrt(2.0 * std::numbers::pi);
    return t * specfun::gaussian_tail_q(-t) + phi;
  };
  return (antiderivative(w) - antiderivative(w - radius_)) / radius_;
}

// ------------------------------------------------------------- quadrature

PoissonWindow poisson_window(double mean, double max_omitted) {
  if (!(mean >= 0.0) || std::isinf(mean)) {
    throw DomainError("poisson_window: mean must be finite and >= 0");
  }
  if (mean == 0.0) return {0, {1.0}, 0.0};

  const int mode = static_cast<int>(std::floor(mean));
  const double p_mode = std::exp(-mean + mode * std::log(mean) - std::lgamma(mode + 1.0));
  const double half_budget = 0.5 * max_omitted;

  std::vector<double> upper{p_mode};
  double upper_tail = 0.0;
  for (int k = mode;; ++k) {
    const double q = mean / (k + 1.0);
    const double p = upper.back();
    if (q < 1.0) {
      const double bound = p * q / (1.0 - q);
      if (bound <= half_budget) {
        upper_tail = bound;
        break;
      }
    }
    upper.push_back(p * q);
  }

  std::vector<double> lower;  // k = mode-1, mode-2, ...
  double lower_tail = 0.0;
  double p = p_mode;
  for (int k = mode; k > 0; --k) {
    const double q = k / mean;
    if (q < 1.0) {
      const double bound = p * q / (1.0 - q);
      if (bound <= half_budget) {
        lower_tail = bound;
        break;
      }
    }
    p *= q;
    lower.push_back(p);
  }

  PoissonWindow window;
  window.first = mode - static_cast<int>(lower.size());
  window.weights.assign(lower.rbegin(), lower.rend());
  window.weights.insert(window.weights.end(), upper.begin(), upper.end());
  double total = 0.0;
  for (double w : window.weights) total += w;
  for (double& w : window.weights) w /= total;
  window.omitted_mass = upper_tail + lower_tail;
  return window;
}

double expect_ncx2_radial(const NoncentralChiSquare& law, const ScalarFn& f,
                          const QuadratureSpec& spec) {
  spec.validate();
  const int k = law.dof();
  const double mu = std::sqrt(law.noncentrality());
  const double order = 0.5 * k - 1.0;
  // Density of U = sqrt(V); the power form also covers mu = 0.
  const ScalarFn integrand = [&](double u) {
    double log_p = -0.5 * (u - mu) * (u - mu) - u * mu +
                   specfun::log_bessel_i_over_power(order, mu * u);
    if (k > 1) log_p += (k - 1) * std::log(u);
    return std::exp(log_p) * f(u * u);
  };
  // U is 1-Lipschitz in Z and E[U] lies in [c - 1, c].
  const double c = std::sqrt(law.noncentrality() + k);
  const double t = spec.radial_trunc_sigmas;
  const double lo = std::max(0.0, c - 1.0 - t);
  const double hi = c + t;
  const double split = std::clamp(mu, lo, hi);
  double total = 0.0;
  if (split > lo) total += integrate(integrand, lo, split, spec);
  total += integrate(integrand, split, hi, spec);
  return total;
}

double expect_ncx2(const NoncentralChiSquare& law, const ScalarFn& f,
                   const QuadratureSpec& spec) {
  spec.validate();
  const PoissonWindow window =
      poisson_window(0.5 * law.noncentrality(), spec.poisson_trunc_mass);

  const auto evaluate = [&](int points) {
    double total = 0.0;
    for (std::size_t j = 0; j < window.weights.size(); ++j) {
      const int dof = law.dof() + 2 * (window.first + static_cast<int>(j));
      const GammaRule& rule = gamma_rule(dof - 2, points);
      double term = 0.0;
      for (int i = 0; i < points; ++i) term += rule.weights[i] * f(2.0 * rule.nodes[i]);
      total += window.weights[j] * term;
    }
    return total;
  };

  int points = spec.min_nodes;
  double previous = evaluate(points);
  while (true) {
    const int next = 2 * points;
    if (next > spec.max_nodes) {
      if (spec.radial_fallback) return expect_ncx2_radial(law, f, spec);
      throw NonConvergenceError(
          "expect_ncx2: node doubling did not converge within max_nodes",
          previous, std::abs(previous));
    }
    const double current = evaluate(next);
    const double diff = std::abs(current - previous);
    if (diff <= std::max(spec.rel_tol * std::abs(current), spec.abs_tol)) {
      return current;
    }
    previous = current;
    points = next;
  }
}

double integrate(const ScalarFn& f, double a, double b,
                 const QuadratureSpec& spec) {
  using Rule = boost::math::quadrature::gauss_kronrod<double, 21>;
  constexpr unsigned kMaxDepth = 18;
  double error = 0.0;
  double l1 = 0.0;
  const double value = Rule::integrate(f, a, b, kMaxDepth, spec.rel_tol, &error, &l1);
  if (error > std::max(spec.rel_tol * l1, spec.abs_tol)) {
    throw NonConvergenceError("integrate: adaptive Gauss-Kronrod did not converge",
                              value, error);
  }
  return value;
}

double expect_boxcar(const BoxcarGaussianLaw& law, const PairFn& g,
                   const QuadratureSpec& spec) {
  spec.validate();
  const int n = law.n();
  const double radius = law.radius();

  const auto inner = [&](double w1) {
    if (n == 1) return g(w1, std::abs(w1));
    const NoncentralChiSquare rest(n - 1, 0.0);
    return expect_ncx2(
        rest, [&](double s) { return g(w1, std::sqrt(w1 * w1 + s)); }, spec);
  };
  const ScalarFn integrand = [&](double w1) {
    return law.w1_density(w1) * inner(w1);
  };

  const double t = spec.radial_trunc_sigmas;
  return integrate(integrand, -t, 0.0, spec) +
         integrate(integrand, 0.0, radius, spec) +
         integrate(integrand, radius, radius + t, spec);
}

// --------------------------------------------------------------- sampling

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 finalizer over a golden-ratio spaced counter.
  std::uint64_t z = seed + (stream + 1) * 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

NormalStream::NormalStream(std::uint64_t seed, std::uint64_t stream)
    : engine_(stream_seed(seed, stream)) {}

double NormalStream::uniform() {
  return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
}

double NormalStream::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double radius = std::sqrt(-2.0 * std::log(uniform()));
  const double angle = 2.0 * std::numbers::pi * uniform();
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

Ncx2Sampler::Ncx2Sampler(const NoncentralChiSquare& law, std::uint64_t seed,
                         std::uint64_t stream)
    : dof_(law.dof()),
      shift_(std::sqrt(law.noncentrality())),
      normals_(seed, stream) {}

double Ncx2Sampler::operator()() {
  const double first = normals_.normal() + shift_;
  double total = first * first;
  for (int i = 1; i < dof_; ++i) {
    const double z = normals_.normal();
    total += z * z;
  }
  return total;
}

BoxcarSampler::BoxcarSampler(const BoxcarGaussianLaw& law, std::uint64_t seed,
                         std::uint64_t stream)
    : n_(law.n()), radius_(law.radius()), normals_(seed, stream) {}

std::pair<double, double> BoxcarSampler::operator()() {
  const double w1 = radius_ * normals_.uniform() + normals_.normal();
  double norm2 = w1 * w1;
  for (int i = 1; i < n_; ++i) {
    const double z = normals_.normal();
    norm2 += z * z;
  }
  return {w1, std::sqrt(norm2)};
}

namespace {

struct Moments {
  std::int64_t count = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) {
    ++count;
    const double delta = x - mean;
    mean += delta / static_cast<double>(count);
    m2 += delta * (x - mean);
  }

  void merge(const Moments& other) {
    if (other.count == 0) return;
    const double total = static_cast<double>(count + other.count);
    const double delta = other.mean - mean;
    mean += delta * static_cast<double>(other.count) / total;
    m2 += other.m2 + delta * delta * static_cast<double>(count) *
                         static_cast<double>(other.count) / total;
    count += other.count;
  }
};

// Runs chunk_fn(chunk_index, chunk_size) over all chunks, possibly on several
// threads, and merges the per-chunk moments in chunk order so the result does
// not depend on scheduling.
template <class ChunkFn>
McEstimate run_chunks(std::int64_t samples, ChunkFn chunk_fn) {
  const std::int64_t chunks = (samples + kMcChunk - 1) / kMcChunk;
  std::vector<Moments> parts(static_cast<std::size_t>(chunks));
  const auto work = [&](std::int64_t begin, std::int64_t stride) {
    for (std::int64_t c = begin; c < chunks; c += stride) {
      const std::int64_t size = std::min(kMcChunk, samples - c * kMcChunk);
      parts[static_cast<std::size_t>(c)] = chunk_fn(c, size);
    }
  };
  const std::int64_t workers = std::min<std::int64_t>(
      chunks, std::max(1u, std::thread::hardware_concurrency()));
  if (workers <= 1) {
    work(0, 1);
  } else {
    std::vector<std::jthread> pool;
    for (std::int64_t t = 0; t < workers; ++t) pool.emplace_back(work, t, workers);
  }
  Moments total;
  for (const Moments& part : parts) total.merge(part);
  const double variance =
      total.count > 1 ? total.m2 / static_cast<double>(total.count - 1) : 0.0;
  return {total.mean, std::sqrt(variance / static_cast<double>(total.count)),
          total.count};
}

}  // namespace

std::vector<double> sample_ncx2(const NoncentralChiSquare& law,
                                const McSpec& mc) {
  mc.validate();
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(mc.samples));
  for (std::int64_t c = 0; c * kMcChunk < mc.samples; ++c) {
    Ncx2Sampler draw(law, mc.seed, static_cast<std::uint64_t>(c));
    const std::int64_t size = std::min(kMcChunk, mc.samples - c * kMcChunk);
    for (std::int64_t i = 0; i < size; ++i) out.push_back(draw());
  }
  return out;
}

McEstimate mc_expect_ncx2(const NoncentralChiSquare& law, const ScalarFn& f,
                          const McSpec& mc) {
  mc.validate();
  return run_chunks(mc.samples, [&](std::int64_t chunk, std::int64_t size) {
    Ncx2Sampler draw(law, mc.seed, static_cast<std::uint64_t>(chunk));
    Moments m;
    for (std::int64_t i = 0; i < size; ++i) m.add(f(draw()));
    return m;
  });
}

McEstimate mc_expect_boxcar(const BoxcarGaussianLaw& law, const PairFn& g,
                          const McSpec& mc) {
  mc.validate();
  return run_chunks(mc.samples, [&](std::int64_t chunk, std::int64_t size) {
    BoxcarSampler draw(law, mc.seed, static_cast<std::uint64_t>(chunk));
    Moments m;
    for (std::int64_t i = 0; i < size; ++i) {
      const auto [w1, norm] = draw();
      m.add(g(w1, norm));
    }
    return m;
  });
}

// ----------------------------------------------------------------- engine

ExpectationEngine::ExpectationEngine(QuadratureSpec spec)
    : method_(Method::Quadrature), spec_(spec) {
  spec_.validate();
}

ExpectationEngine::ExpectationEngine(McSpec mc, QuadratureSpec spec)
    : method_(Method::MonteCarlo), spec_(spec), mc_(mc) {
  spec_.validate();
  mc.validate();
}

double ExpectationEngine::ncx2(const NoncentralChiSquare& law,
                               const ScalarFn& f) const {
  if (method_ == Method::MonteCarlo) return mc_expect_ncx2(law, f, *mc_).mean;
  return expect_ncx2(law, f, spec_);
}

double ExpectationEngine::boxcar(const BoxcarGaussianLaw& law, const PairFn& g) const {
  if (method_ == Method::MonteCarlo) return mc_expect_boxcar(law, g, *mc_).mean;
  return expect_boxcar(law, g, spec_);
}

double ExpectationEngine::integrate(const ScalarFn& f, double a, double b) const {
  return spherecap::integrate(f, a, b, spec_);
}

ExpectationEngine ExpectationEngine::refined() const {
  ExpectationEngine out = *this;
  out.spec_ = spec_.refined();
  if (out.mc_) out.mc_->samples *= 2;
  return out;
}

std::string ExpectationEngine::describe() const {
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os << "method=" << (method_ == Method::Quadrature ? "quad" : "mc")
     << " rel_tol=" << spec_.rel_tol << " abs_tol=" << spec_.abs_tol
     << " nodes=" << spec_.min_nodes << ".." << spec_.max_nodes
     << " poisson_trunc_mass=" << spec_.poisson_trunc_mass
     << " radial_trunc_sigmas=" << spec_.radial_trunc_sigmas
     << " radial_fallback=" << (spec_.radial_fallback ? "on" : "off");
  if (mc_) {
    os << " seed=" << mc_->seed << " samples=" << mc_->samples
       << " rng=" << kRngAlgorithm;
  }
  return os.str();
}

}  // namespace spherecap
