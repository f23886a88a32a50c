#pragma once

// Scoring rules for a single forecast-outcome pair. Negative orientation
// throughout: lower is better.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "psl/density.hpp"
#include "psl/errors.hpp"
#include "psl/normal.hpp"
#include "psl/quadrature.hpp"

namespace psl {

enum class Family { ignorance, crps, energy, power, pseudospherical, naive_linear };

/// A scoring rule plus its family parameter (alpha for power, beta for energy
/// and pseudospherical; unused otherwise).
struct ScoreSpec {
  Family family = Family::ignorance;
  double parameter = 0.0;

  static ScoreSpec ignorance() { return {Family::ignorance, 0.0}; }
  static ScoreSpec crps() { return {Family::crps, 0.0}; }
  static ScoreSpec energy(double beta) { return checked({Family::energy, beta}); }
  static ScoreSpec power(double alpha) { return checked({Family::power, alpha}); }
  static ScoreSpec pseudospherical(double beta) { return checked({Family::pseudospherical, beta}); }
  static ScoreSpec naive_linear() { return {Family::naive_linear, 0.0}; }

  bool is_strictly_proper() const noexcept { return family != Family::naive_linear; }
  /// Ignorance is the only proper local rule; the naive linear score is local but improper.
  bool is_local() const noexcept { return family == Family::ignorance; }
  bool uses_monte_carlo() const noexcept { return family == Family::energy; }

  void validate() const {
    switch (family) {
      case Family::energy:
        if (!(parameter > 0.0 && parameter < 2.0))
          throw DomainError("energy score: beta must lie in (0, 2)");
        break;
      case Family::power:
        if (!(parameter > 1.0) || !std::isfinite(parameter))
          throw DomainError("power score: alpha must be greater than 1");
        break;
      case Family::pseudospherical:
        if (!(parameter > 1.0) || !std::isfinite(parameter))
          throw DomainError("pseudospherical score: beta must be greater than 1");
        break;
      default: break;
    }
  }

  std::string name() const {
    switch (family) {
      case Family::ignorance: return "ignorance";
      case Family::crps: return "crps";
      case Family::energy: return "energy";
      case Family::power: return "power";
      case Family::pseudospherical: return "pseudospherical";
      case Family::naive_linear: return "naive_linear";
    }
    return "unknown";
  }

  /// Short label, e.g. "power(2)".
  std::string label() const {
    if (family == Family::energy || family == Family::power || family == Family::pseudospherical) {
      std::ostringstream out;
      out << name() << '(' << parameter << ')';
      return out.str();
    }
    return name();
  }

  bool operator==(const ScoreSpec&) const = default;

 private:
  static ScoreSpec checked(ScoreSpec s) {
    s.validate();
    return s;
  }
};

struct ScoreValue {
  double value = 0.0;
  std::optional<double> std_error;  // Monte-Carlo estimates only
  bool infinite = false;

  static ScoreValue exact(double v) { return ScoreValue{v, std::nullopt, std::isinf(v)}; }
};

/// Seed is mandatory; there is no implicit entropy source.
struct MonteCarloOptions {
  explicit MonteCarloOptions(std::uint64_t seed_, std::size_t samples_ = 1'000'000)
      : seed(seed_), samples(samples_) {}
  std::uint64_t seed;
  std::size_t samples;
};

struct ScoreOptions {
  QuadratureOptions quadrature{};
  std::optional<MonteCarloOptions> monte_carlo;
  /// Ignorance only: evaluate max(pdf, floor) instead of pdf. Off by default.
  std::optional<double> density_floor;
};

inline constexpr std::size_t min_energy_samples = 10'000;

// ---------------------------------------------------------------------------

/// -log2 pdf(y) in bits; flagged +inf where the density is zero.
template <UnivariateDensity D>
ScoreValue ignorance(const D& d, double y, std::optional<double> density_floor = std::nullopt) {
  double log_density = d.log_pdf(y);
  if (density_floor) {
    if (!(*density_floor > 0.0)) throw ValidationError("density floor must be positive");
    log_density = std::max(log_density, std::log(*density_floor));
  }
  if (log_density == -std::numeric_limits<double>::infinity())
    return ScoreValue{std::numeric_limits<double>::infinity(), std::nullopt, true};
  return ScoreValue{-log_density / std::numbers::ln2, std::nullopt, false};
}

/// Integral of (F(x) - H(x - y))^2 with H the right-continuous step. The
/// integrand vanishes outside [min(support.lo, y), max(support.hi, y)].
template <UnivariateDensity D>
ScoreValue crps(const D& d, double y, const QuadratureOptions& opts = {}) {
  detail::require_finite(y, "crps");
  const auto e = d.support();
  const double lo = std::min(e.lo, y);
  const double hi = std::max(e.hi, y);
  auto pts = d.panel_points();
  pts.push_back(y);
  const auto bp = make_breakpoints(std::move(pts), lo, hi);
  const auto integrand = [&](double x) {
    if (x < y) {
      const double f = d.cdf(x);
      return f * f;
    }
    const double s = d.sf(x);
    return s * s;
  };
  return ScoreValue::exact(integrate(integrand, std::span<const double>(bp), opts).value);
}

/// Closed form for N(mean, stddev^2): s [z (2 Phi(z) - 1) + 2 phi(z) - 1/sqrt(pi)].
inline double crps_gaussian(double mean, double stddev, double y) {
  const double z = (y - mean) / stddev;
  return stddev * (z * (2.0 * normal::cdf(z) - 1.0) + 2.0 * normal::pdf(z) -
                   1.0 / std::sqrt(std::numbers::pi));
}

/// Monte-Carlo estimate of E|x - y|^b - 0.5 E|x - x'|^b from two
/// independently seeded streams for x and x'.
template <UnivariateDensity D>
ScoreValue energy_score(const D& d, double y, double beta, const MonteCarloOptions& mc) {
  if (!(beta > 0.0 && beta < 2.0)) throw DomainError("energy score: beta must lie in (0, 2)");
  if (mc.samples < min_energy_samples) throw DomainError("energy score: need at least 10^4 samples");
  detail::require_finite(y, "energy_score");

  std::seed_seq seed_x{mc.seed, std::uint64_t{0}};
  std::seed_seq seed_xp{mc.seed, std::uint64_t{1}};
  std::mt19937_64 rng_x(seed_x);
  std::mt19937_64 rng_xp(seed_xp);
  std::vector<double> x(mc.samples);
  std::vector<double> xp(mc.samples);
  d.sample_into(rng_x, std::span<double>(x));
  d.sample_into(rng_xp, std::span<double>(xp));

  // Welford accumulation of the per-draw estimator.
  double mean = 0.0;
  double m2 = 0.0;
  for (std::size_t i = 0; i < mc.samples; ++i) {
    const double v = std::pow(std::abs(x[i] - y), beta) - 0.5 * std::pow(std::abs(x[i] - xp[i]), beta);
    const double delta = v - mean;
    mean += delta / static_cast<double>(i + 1);
    m2 += delta * (v - mean);
  }
  const double variance = m2 / static_cast<double>(mc.samples - 1);
  return ScoreValue{mean, std::sqrt(variance / static_cast<double>(mc.samples)), false};
}

/// -alpha p(y)^(alpha-1) + (alpha-1) Int p^alpha.
template <UnivariateDensity D>
ScoreValue power_score(const D& d, double y, double alpha, const QuadratureOptions& opts = {}) {
  if (!(alpha > 1.0) || !std::isfinite(alpha)) throw DomainError("power score: alpha must be greater than 1");
  const double p = d.pdf(y);
  return ScoreValue::exact(-alpha * std::pow(p, alpha - 1.0) +
                           (alpha - 1.0) * lp_norm_integral(d, alpha, opts));
}

/// -p(y)^(beta-1) / (Int p^beta)^((beta-1)/beta), i.e. -(p(y) / ||p||_beta)^(beta-1).
/// With exponent 1/beta in the denominator the rule is only proper at beta = 2.
template <UnivariateDensity D>
ScoreValue pseudospherical_score(const D& d, double y, double beta, const QuadratureOptions& opts = {}) {
  if (!(beta > 1.0) || !std::isfinite(beta))
    throw DomainError("pseudospherical score: beta must be greater than 1");
  const double p = d.pdf(y);
  if (p == 0.0) return ScoreValue::exact(0.0);
  return ScoreValue::exact(-std::pow(p, beta - 1.0) / std::pow(lp_norm_integral(d, beta, opts), (beta - 1.0) / beta));
}

/// -p(y). Improper; kept as a negative control for propriety checks.
template <UnivariateDensity D>
ScoreValue naive_linear_score(const D& d, double y) {
  return ScoreValue::exact(-d.pdf(y));
}

template <UnivariateDensity D>
ScoreValue score(const ScoreSpec& spec, const D& d, double y, const ScoreOptions& opts = {}) {
  spec.validate();
  switch (spec.family) {
    case Family::ignorance: return ignorance(d, y, opts.density_floor);
    case Family::crps: return crps(d, y, opts.quadrature);
    case Family::energy:
      if (!opts.monte_carlo) throw ValidationError("energy score requires a Monte-Carlo seed");
      return energy_score(d, y, spec.parameter, *opts.monte_carlo);
    case Family::power: return power_score(d, y, spec.parameter, opts.quadrature);
    case Family::pseudospherical: return pseudospherical_score(d, y, spec.parameter, opts.quadrature);
    case Family::naive_linear: return naive_linear_score(d, y);
  }
  throw ValidationError("unknown score family");
}

/// d CRPS / dy = 2 F(y) - 1, evaluated without cancellation so the sign is
/// right even where the density is vanishingly small. Zero at the median.
template <UnivariateDensity D>
double crps_outcome_derivative(const D& d, double y) {
  return 2.0 * d.cdf_excess(y, 0.5);
}

}  // namespace psl
