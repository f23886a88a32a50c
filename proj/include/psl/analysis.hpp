#pragma once

// Expected and relative scores, strict-propriety falsification, implausibility
// witnesses, and behaviour of relative scores under transformation.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "psl/density.hpp"
#include "psl/errors.hpp"
#include "psl/quadrature.hpp"
#include "psl/scores.hpp"

namespace psl {

namespace detail {

template <UnivariateDensity Q, UnivariateDensity P>
std::vector<double> truth_breakpoints(const Q& truth, const P& forecast) {
  const auto e = truth.support();
  auto pts = truth.panel_points();
  const auto extra = forecast.panel_points();
  pts.insert(pts.end(), extra.begin(), extra.end());
  return make_breakpoints(std::move(pts), e.lo, e.hi);
}

inline double combine_errors(const std::optional<double>& a, const std::optional<double>& b) {
  const double x = a.value_or(0.0);
  const double y = b.value_or(0.0);
  return std::sqrt(x * x + y * y);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Expected scores.

/// E_truth[S(forecast, Y)] = Int S(forecast, y) truth(y) dy over the truth's
/// support envelope. Energy scores use nested Monte Carlo: Y from the truth
/// and x, x' from the forecast, each from its own seeded stream.
template <UnivariateDensity P, UnivariateDensity Q>
ScoreValue expected_score(const ScoreSpec& spec, const P& forecast, const Q& truth,
                          const ScoreOptions& opts = {}) {
  spec.validate();
  const auto& qopts = opts.quadrature;

  if (spec.family == Family::energy) {
    if (!opts.monte_carlo) throw ValidationError("energy score requires a Monte-Carlo seed");
    const auto& mc = *opts.monte_carlo;
    if (mc.samples < min_energy_samples) throw DomainError("energy score: need at least 10^4 samples");
    std::seed_seq sy{mc.seed, std::uint64_t{2}};
    std::seed_seq sx{mc.seed, std::uint64_t{0}};
    std::seed_seq sxp{mc.seed, std::uint64_t{1}};
    std::mt19937_64 ry(sy), rx(sx), rxp(sxp);
    std::vector<double> y(mc.samples), x(mc.samples), xp(mc.samples);
    truth.sample_into(ry, std::span<double>(y));
    forecast.sample_into(rx, std::span<double>(x));
    forecast.sample_into(rxp, std::span<double>(xp));
    double mean = 0.0;
    double m2 = 0.0;
    const double beta = spec.parameter;
    for (std::size_t i = 0; i < mc.samples; ++i) {
      const double v = std::pow(std::abs(x[i] - y[i]), beta) - 0.5 * std::pow(std::abs(x[i] - xp[i]), beta);
      const double delta = v - mean;
      mean += delta / static_cast<double>(i + 1);
      m2 += delta * (v - mean);
    }
    const double var = m2 / static_cast<double>(mc.samples - 1);
    return ScoreValue{mean, std::sqrt(var / static_cast<double>(mc.samples)), false};
  }

  const auto bp = detail::truth_breakpoints(truth, forecast);
  const std::span<const double> panels(bp);
  const auto against_truth = [&](auto&& f) {
    return integrate([&](double y) { return f(y) * truth.pdf(y); }, panels, qopts).value;
  };

  switch (spec.family) {
    case Family::ignorance:
      try {
        return ScoreValue::exact(against_truth([&](double y) {
          return ignorance(forecast, y, opts.density_floor).value;
        }));
      } catch (const NonFiniteIntegrand&) {
        return ScoreValue{std::numeric_limits<double>::infinity(), std::nullopt, true};
      }
    case Family::crps:
      return ScoreValue::exact(against_truth([&](double y) { return crps(forecast, y, qopts).value; }));
    case Family::power: {
      // The norm term does not depend on y; integrate only the pointwise part.
      const double a = spec.parameter;
      const double norm = lp_norm_integral(forecast, a, qopts);
      const double pointwise = against_truth([&](double y) { return std::pow(forecast.pdf(y), a - 1.0); });
      return ScoreValue::exact(-a * pointwise + (a - 1.0) * norm);
    }
    case Family::pseudospherical: {
      const double b = spec.parameter;
      const double norm = lp_norm_integral(forecast, b, qopts);
      const double pointwise = against_truth([&](double y) { return std::pow(forecast.pdf(y), b - 1.0); });
      return ScoreValue::exact(-pointwise / std::pow(norm, (b - 1.0) / b));
    }
    case Family::naive_linear:
      return ScoreValue::exact(-against_truth([&](double y) { return forecast.pdf(y); }));
    case Family::energy: break;
  }
  throw ValidationError("unknown score family");
}

/// expected_score(a) - expected_score(b); negative favours a.
template <UnivariateDensity A, UnivariateDensity B, UnivariateDensity Q>
ScoreValue relative_expected_score(const ScoreSpec& spec, const A& a, const B& b, const Q& truth,
                                   const ScoreOptions& opts = {}) {
  const auto ea = expected_score(spec, a, truth, opts);
  const auto eb = expected_score(spec, b, truth, opts);
  ScoreValue out;
  out.infinite = ea.infinite || eb.infinite;
  out.value = ea.value - eb.value;
  if (ea.std_error || eb.std_error) out.std_error = detail::combine_errors(ea.std_error, eb.std_error);
  return out;
}

// ---------------------------------------------------------------------------
// Figure 1: A = N(0, s^2) against B = N(0, 1/s^2) with outcomes from N(0, 1).

struct SkillCurve {
  std::vector<double> grid;
  std::vector<std::pair<std::string, std::vector<double>>> columns;

  const std::vector<double>& column(const std::string& name) const {
    for (const auto& [key, values] : columns)
      if (key == name) return values;
    throw ValidationError("no such column: " + name);
  }
};

inline constexpr double figure1_ignorance_scale = 1.0 / 20.0;

inline SkillCurve figure1_curve(std::span<const double> sigma_grid, const QuadratureOptions& qopts = {}) {
  if (sigma_grid.empty()) throw ValidationError("figure 1: empty sigma grid");
  for (std::size_t i = 0; i < sigma_grid.size(); ++i) {
    if (!(sigma_grid[i] > 1.0) || !std::isfinite(sigma_grid[i]))
      throw ValidationError("figure 1: sigma values must exceed 1");
    if (i > 0 && !(sigma_grid[i - 1] < sigma_grid[i]))
      throw ValidationError("figure 1: sigma grid must be strictly increasing");
  }
  const auto truth = MixtureDensity::normal(0.0, 1.0);
  const ScoreSpec specs[] = {ScoreSpec::ignorance(), ScoreSpec::crps(), ScoreSpec::power(2.0),
                             ScoreSpec::pseudospherical(2.0)};
  const char* names[] = {"ignorance", "crps", "pls", "sps"};

  SkillCurve curve;
  curve.grid.assign(sigma_grid.begin(), sigma_grid.end());
  for (const char* n : names) curve.columns.emplace_back(n, std::vector<double>{});
  ScoreOptions opts;
  opts.quadrature = qopts;
  for (double s : sigma_grid) {
    const auto wide = MixtureDensity::normal(0.0, s);
    const auto narrow = MixtureDensity::normal(0.0, 1.0 / s);
    for (std::size_t k = 0; k < 4; ++k)
      curve.columns[k].second.push_back(relative_expected_score(specs[k], wide, narrow, truth, opts).value);
  }
  std::vector<double> scaled = curve.columns[0].second;
  for (double& v : scaled) v *= figure1_ignorance_scale;
  curve.columns.emplace_back("ignorance_div20", std::move(scaled));
  return curve;
}

// ---------------------------------------------------------------------------
// Strict propriety (falsification harness).

struct PairSet {
  AnyDensity truth;
  std::vector<AnyDensity> candidates;  // must include truth itself
};

struct ProprietyOptions {
  double tolerance = 1e-7;       // allowed negative margin
  double strict_l1 = 0.05;       // beyond this L1 distance ...
  double strict_margin = 1e-4;   // ... the margin must exceed this
  double mc_sigmas = 4.0;        // Monte-Carlo families: tolerance in standard errors
  ScoreOptions score{};
};

struct ProprietyFinding {
  std::size_t pair_index = 0;
  std::size_t candidate_index = 0;
  double expected_candidate = 0.0;
  double expected_truth = 0.0;
  double margin = 0.0;  // E_q[S(p)] - E_q[S(q)]
  std::optional<double> std_error;
  double l1_distance = 0.0;
  bool improper = false;    // margin below -tolerance
  bool not_strict = false;  // distinct p not penalised
};

struct ProprietyReport {
  ScoreSpec spec;
  std::vector<ProprietyFinding> findings;

  std::size_t violations() const {
    return static_cast<std::size_t>(std::count_if(findings.begin(), findings.end(), [](const auto& f) {
      return f.improper || f.not_strict;
    }));
  }
  bool passed() const { return violations() == 0; }
  /// The violating entry with the most negative margin, if any.
  std::optional<ProprietyFinding> worst_violation() const {
    std::optional<ProprietyFinding> worst;
    for (const auto& f : findings)
      if ((f.improper || f.not_strict) && (!worst || f.margin < worst->margin)) worst = f;
    return worst;
  }
};

/// L1 distance Int |p - q| by quadrature over the union of both supports.
template <UnivariateDensity P, UnivariateDensity Q>
double l1_distance(const P& p, const Q& q, const QuadratureOptions& opts = {}) {
  const auto ep = p.support();
  const auto eq = q.support();
  auto pts = p.panel_points();
  const auto more = q.panel_points();
  pts.insert(pts.end(), more.begin(), more.end());
  const auto bp = make_breakpoints(std::move(pts), std::min(ep.lo, eq.lo), std::max(ep.hi, eq.hi));
  return integrate([&](double x) { return std::abs(p.pdf(x) - q.pdf(x)); }, std::span<const double>(bp), opts)
      .value;
}

inline ProprietyReport propriety_check(const ScoreSpec& spec, std::span<const PairSet> pair_sets,
                                       const ProprietyOptions& opts = {}) {
  spec.validate();
  ProprietyReport report{spec, {}};
  for (std::size_t k = 0; k < pair_sets.size(); ++k) {
    const auto& set = pair_sets[k];
    if (std::find(set.candidates.begin(), set.candidates.end(), set.truth) == set.candidates.end())
      throw ValidationError("propriety check: candidate set must include the truth itself");
    const auto baseline = expected_score(spec, set.truth, set.truth, opts.score);
    for (std::size_t i = 0; i < set.candidates.size(); ++i) {
      const auto& p = set.candidates[i];
      const auto ep = p == set.truth ? baseline : expected_score(spec, p, set.truth, opts.score);
      ProprietyFinding f;
      f.pair_index = k;
      f.candidate_index = i;
      f.expected_candidate = ep.value;
      f.expected_truth = baseline.value;
      f.margin = ep.infinite ? std::numeric_limits<double>::infinity() : ep.value - baseline.value;
      if (ep.std_error || baseline.std_error) f.std_error = detail::combine_errors(ep.std_error, baseline.std_error);
      f.l1_distance = p == set.truth ? 0.0 : l1_distance(p, set.truth, opts.score.quadrature);
      const double allowance = std::max(opts.tolerance, opts.mc_sigmas * f.std_error.value_or(0.0));
      f.improper = f.margin < -allowance;
      f.not_strict = !f.improper && f.l1_distance > opts.strict_l1 &&
                     !(f.margin > std::max(opts.strict_margin, allowance));
      report.findings.push_back(f);
    }
  }
  return report;
}

/// A random forecast density: a Gaussian with mean in [-3, 3] and stddev in
/// [0.2, 5], or (half the time) a two-component mixture of such Gaussians.
template <class URBG>
MixtureDensity random_forecast_density(URBG& rng) {
  std::uniform_real_distribution<double> mean(-3.0, 3.0);
  std::uniform_real_distribution<double> log_sd(std::log(0.2), std::log(5.0));
  std::uniform_real_distribution<double> weight(0.2, 0.8);
  std::bernoulli_distribution two(0.5);
  if (!two(rng)) return MixtureDensity::normal(mean(rng), std::exp(log_sd(rng)));
  const double w = weight(rng);
  const double m1 = mean(rng);
  const double s1 = std::exp(log_sd(rng));
  const double m2 = mean(rng);
  const double s2 = std::exp(log_sd(rng));
  return MixtureDensity::gaussian_mixture({{w, m1, s1}, {1.0 - w, m2, s2}});
}

/// `count` pair sets, each a random truth q with candidates {q, p}.
inline std::vector<PairSet> sample_pair_sets(std::uint64_t seed, std::size_t count) {
  std::mt19937_64 rng(seed);
  std::vector<PairSet> sets;
  sets.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    auto q = random_forecast_density(rng);
    auto p = random_forecast_density(rng);
    sets.push_back(PairSet{q, {q, p}});
  }
  return sets;
}

/// Truth N(0, 1) against N(0, 0.5^2) and N(0, 2^2): the documented
/// counterexample pair for the naive linear score plus a wider contrast.
inline PairSet reference_pair_set() {
  const auto q = MixtureDensity::normal(0.0, 1.0);
  return PairSet{q, {q, MixtureDensity::normal(0.0, 0.5), MixtureDensity::normal(0.0, 2.0)}};
}

// ---------------------------------------------------------------------------
// Implausibility witnesses.

struct WitnessReport {
  ScoreSpec spec;
  AnyDensity p1;
  AnyDensity p2;
  double y = 0.0;
  double ratio = 0.0;  // p1(y) / p2(y); +inf when p2(y) = 0
  ScoreValue s1;
  ScoreValue s2;
  bool verified = false;
};

/// Scores both forecasts at y. Verified when p1 puts more density on y yet
/// scores worse; Monte-Carlo scores must differ by more than three combined
/// standard errors.
template <UnivariateDensity D1, UnivariateDensity D2>
WitnessReport verify_witness(const ScoreSpec& spec, const D1& p1, const D2& p2, double y,
                             const ScoreOptions& opts = {}) {
  const double l1 = p1.log_pdf(y);
  const double l2 = p2.log_pdf(y);
  constexpr double neg_inf = -std::numeric_limits<double>::infinity();
  if (l1 == neg_inf && l2 == neg_inf)
    throw DomainError("verify_witness: both densities vanish at the outcome; ratio undefined");
  WitnessReport r{spec, AnyDensity(p1), AnyDensity(p2), y, 0.0, {}, {}, false};
  r.ratio = l2 == neg_inf ? std::numeric_limits<double>::infinity() : std::exp(l1 - l2);
  r.s1 = score(spec, p1, y, opts);
  r.s2 = score(spec, p2, y, opts);
  const double noise = 3.0 * detail::combine_errors(r.s1.std_error, r.s2.std_error);
  r.verified = r.ratio > 1.0 && r.s1.value - r.s2.value > noise;
  return r;
}

namespace detail {

/// Bisection for the root of a monotone f on [lo, hi]; f(lo) and f(hi) must
/// differ in sign. Stops when |f| <= tol or the bracket collapses.
template <class F>
double bisect(F&& f, double lo, double hi, double tol) {
  double flo = f(lo);
  if (flo == 0.0) return lo;
  const double fhi = f(hi);
  if (fhi == 0.0) return hi;
  if ((flo < 0.0) == (fhi < 0.0)) throw NumericalError("bisection: root is not bracketed");
  for (int i = 0; i < 500; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if (std::abs(fm) <= tol || !(lo < mid && mid < hi)) return mid;
    if ((fm < 0.0) == (flo < 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

inline constexpr double witness_log_ratio_tol = 1e-9;

inline WitnessReport construct_crps_witness(const ScoreSpec& spec, double r, const ScoreOptions& opts) {
  // p2 has its median at y = 0 between two modes; p1 is p2 shifted by +1 so
  // one of its modes sits on y.
  if (std::isinf(r)) {
    const auto p2 = MixtureDensity::piecewise_uniform({-1.1, -0.9, 0.9, 1.1}, {0.5, 0.0, 0.5});
    const auto p1 = MixtureDensity::piecewise_uniform({-0.1, 0.1, 1.9, 2.1}, {0.5, 0.0, 0.5});
    return verify_witness(spec, p1, p2, 0.0, opts);
  }
  double s = 0.1;
  for (int i = 0; i < 200; ++i, s *= 0.8) {
    const auto p2 = MixtureDensity::gaussian_mixture({{0.5, -1.0, s}, {0.5, 1.0, s}});
    const auto p1 = MixtureDensity::gaussian_mixture({{0.5, 0.0, s}, {0.5, 2.0, s}});
    if (p1.log_pdf(0.0) - p2.log_pdf(0.0) >= std::log(r)) return verify_witness(spec, p1, p2, 0.0, opts);
  }
  throw NumericalError("crps witness: could not reach the requested ratio");
}

inline WitnessReport construct_energy_witness(const ScoreSpec& spec, double r, const ScoreOptions& opts) {
  // p2 = N(0, 1). p1 puts half its mass in a narrow mode on y = 0 and half in
  // a far mode at distance 10, which dominates the energy score. The narrow
  // mode's width is solved so p1(0) / p2(0) = r.
  constexpr double far = 10.0;
  const auto p2 = MixtureDensity::normal(0.0, 1.0);
  const auto make_p1 = [](double s) {
    return MixtureDensity::gaussian_mixture({{0.5, 0.0, s}, {0.5, far, s}});
  };
  const double target = std::log(r);
  const double l2 = p2.log_pdf(0.0);
  const auto mismatch = [&](double log_s) { return make_p1(std::exp(log_s)).log_pdf(0.0) - l2 - target; };
  const double log_s = bisect(mismatch, std::log(1e-12), std::log(1.0), witness_log_ratio_tol);
  return verify_witness(spec, make_p1(std::exp(log_s)), p2, 0.0, opts);
}

inline WitnessReport construct_power_witness(const ScoreSpec& spec, double r, const ScoreOptions& opts) {
  const double a = spec.parameter;
  constexpr double u1 = 0.0;
  constexpr double sigma1 = 1.0;
  const auto p1 = MixtureDensity::normal(u1, sigma1);
  // p1(y) must sit below (a-1)^(1/(a-1)) a^(-3/(2(a-1))) p1(u1) so S(p1, y) > 0.
  const double bound = std::pow(a - 1.0, 1.0 / (a - 1.0)) * std::pow(a, -1.5 / (a - 1.0)) * p1.pdf(u1);
  const double target = std::min(0.1, 0.75 * bound);
  const double y = u1 + sigma1 * std::sqrt(-2.0 * std::log(target * std::sqrt(2.0 * std::numbers::pi) * sigma1));
  const double s1 = power_score(p1, y, a, opts.quadrature).value;
  const double p2_at_y = p1.pdf(y) / r;
  const double gaussian_norm_coef = std::pow(2.0 * std::numbers::pi, 0.5 * (1.0 - a)) / std::sqrt(a);

  // Widen p2 until its score at density p2_at_y drops below S(p1, y).
  double sigma2 = sigma1;
  for (int i = 0;; ++i, sigma2 *= 2.0) {
    if (i > 200) throw NumericalError("power witness: no feasible sigma2");
    const bool reachable = normal::inv_sqrt_2pi / sigma2 >= p2_at_y;
    const double s2 = -a * std::pow(p2_at_y, a - 1.0) + (a - 1.0) * gaussian_norm_coef * std::pow(sigma2, 1.0 - a);
    if (!reachable) throw NumericalError("power witness: ratio infeasible for this construction");
    if (s2 < s1) break;
  }
  // Place mu2 below y so that p2(y) = p1(y) / r.
  const double log_target = std::log(p2_at_y);
  const auto mismatch = [&](double mu2) { return MixtureDensity::normal(mu2, sigma2).log_pdf(y) - log_target; };
  const double reach = sigma2 * std::sqrt(2.0 * std::max(0.0, std::log(normal::inv_sqrt_2pi / sigma2) - log_target)) + sigma2;
  const double mu2 = bisect(mismatch, y - reach, y, witness_log_ratio_tol);
  return verify_witness(spec, p1, MixtureDensity::normal(mu2, sigma2), y, opts);
}

inline constexpr double pseudospherical_width_margin = 0.25;

inline WitnessReport construct_pseudospherical_witness(const ScoreSpec& spec, double r, const ScoreOptions& opts) {
  const double b = spec.parameter;
  constexpr double u1 = 0.0;
  constexpr double sigma1 = 1.0;
  // For concentric Gaussians ||p||_b scales as sigma^((1-b)/b), so p1(y) = r p2(y)
  // scores worse once sigma2 > r^(b/(b-1)) sigma1. Also keep sigma2 > r^b sigma1.
  const double width_power = std::max(b, b / (b - 1.0));
  const double sigma2 = std::pow(r, width_power) * sigma1 * (1.0 + pseudospherical_width_margin);
  const auto p1 = MixtureDensity::normal(u1, sigma1);
  const auto p2 = MixtureDensity::normal(u1, sigma2);
  // Concentric pair: the log ratio falls monotonically in |y - u1|; solve for r.
  const double log_r = std::log(r);
  const auto mismatch = [&](double y) { return p1.log_pdf(y) - p2.log_pdf(y) - log_r; };
  double hi = sigma1;
  while (mismatch(u1 + hi) > 0.0) hi *= 2.0;
  const double y = bisect(mismatch, u1, u1 + hi, witness_log_ratio_tol);
  return verify_witness(spec, p1, p2, y, opts);
}

}  // namespace detail

/// Builds a verified witness for ratio r > 1 (r = +inf allowed for CRPS).
inline WitnessReport construct_witness(const ScoreSpec& spec, double r, const ScoreOptions& opts = {}) {
  spec.validate();
  if (!(r > 1.0) || std::isnan(r)) throw DomainError("construct_witness: ratio must exceed 1");
  if (std::isinf(r) && spec.family != Family::crps)
    throw DomainError("construct_witness: an infinite ratio is only constructed for CRPS");
  switch (spec.family) {
    case Family::crps: return detail::construct_crps_witness(spec, r, opts);
    case Family::energy: return detail::construct_energy_witness(spec, r, opts);
    case Family::power: return detail::construct_power_witness(spec, r, opts);
    case Family::pseudospherical: return detail::construct_pseudospherical_witness(spec, r, opts);
    case Family::ignorance:
      throw ValidationError("construct_witness: ignorance is not implausible; no witness exists");
    case Family::naive_linear:
      throw ValidationError("construct_witness: the naive linear score is local; no witness exists");
  }
  throw ValidationError("unknown score family");
}

// ---------------------------------------------------------------------------
// Pointwise relative scores and transformation behaviour.

struct CurvePoint {
  double y;
  double relative;
};

template <UnivariateDensity A, UnivariateDensity B>
std::vector<CurvePoint> relative_score_curve(const ScoreSpec& spec, const A& a, const B& b,
                                             std::span<const double> y_grid, const ScoreOptions& opts = {}) {
  std::vector<CurvePoint> out;
  out.reserve(y_grid.size());
  for (double y : y_grid) out.push_back({y, score(spec, a, y, opts).value - score(spec, b, y, opts).value});
  return out;
}

struct TransformedRelative {
  double pre;
  double post;
};

/// pre = S(a, y) - S(b, y); post is the same comparison after pushing both
/// densities through t and scoring at t(y).
inline TransformedRelative transformed_relative_score(const ScoreSpec& spec, const MixtureDensity& a,
                                                      const MixtureDensity& b, double y, const Transform& t,
                                                      const ScoreOptions& opts = {}) {
  const auto ta = pushforward(a, t);
  const auto tb = pushforward(b, t);
  const double ys = t.forward(y);
  return {score(spec, a, y, opts).value - score(spec, b, y, opts).value,
          score(spec, ta, ys, opts).value - score(spec, tb, ys, opts).value};
}

struct FlipReport {
  ScoreSpec spec;
  MixtureDensity a;
  MixtureDensity b;
  Transform transform;
  double y;              // a point inside the flip region
  double relative_pre;
  double relative_post;
  double region_lo;      // the flip region (pre * post < 0) containing y
  double region_hi;
  std::optional<double> pre_threshold;   // sign change of pre bounding the region
  std::optional<double> post_threshold;  // sign change of post bounding the region
};

struct FlipSearchOptions {
  std::size_t grid_points = 2001;
  double tolerance = 1e-6;
  ScoreOptions score{};
};

/// Scans y_range on a grid for pre * post < 0, then bisects the region's
/// boundaries. Returns the first flip region found, or nothing.
inline std::optional<FlipReport> find_preference_flip(const ScoreSpec& spec, const MixtureDensity& a,
                                                      const MixtureDensity& b, const Transform& t,
                                                      Envelope y_range, const FlipSearchOptions& opts = {}) {
  if (!(y_range.lo < y_range.hi) || !std::isfinite(y_range.lo) || !std::isfinite(y_range.hi))
    throw ValidationError("flip search: range must be finite with lo < hi");
  if (opts.grid_points < 2) throw ValidationError("flip search: need at least two grid points");
  const auto ta = pushforward(a, t);
  const auto tb = pushforward(b, t);
  const auto pre = [&](double y) {
    return score(spec, a, y, opts.score).value - score(spec, b, y, opts.score).value;
  };
  const auto post = [&](double y) {
    const double ys = t.forward(y);
    return score(spec, ta, ys, opts.score).value - score(spec, tb, ys, opts.score).value;
  };

  const std::size_t n = opts.grid_points;
  std::vector<double> ys(n), pres(n), posts(n);
  for (std::size_t i = 0; i < n; ++i) {
    ys[i] = y_range.lo + (y_range.hi - y_range.lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    pres[i] = pre(ys[i]);
    posts[i] = post(ys[i]);
  }
  const auto flipped = [&](std::size_t i) {
    return std::isfinite(pres[i]) && std::isfinite(posts[i]) && pres[i] * posts[i] < 0.0;
  };
  std::size_t first = n;
  for (std::size_t i = 0; i < n; ++i)
    if (flipped(i)) {
      first = i;
      break;
    }
  if (first == n) return std::nullopt;
  std::size_t last = first;
  while (last + 1 < n && flipped(last + 1)) ++last;

  std::optional<double> pre_threshold;
  std::optional<double> post_threshold;
  // Locate the root of whichever relative score changes sign across (i, j).
  const auto boundary = [&](std::size_t i, std::size_t j) {
    const bool pre_changes = (pres[i] < 0.0) != (pres[j] < 0.0) || pres[i] == 0.0 || pres[j] == 0.0;
    const auto& f = pre_changes ? std::function<double(double)>(pre) : std::function<double(double)>(post);
    double lo = ys[i], hi = ys[j];
    double flo = f(lo);
    if (flo == 0.0) hi = lo;
    else if (f(hi) == 0.0) lo = hi;
    while (hi - lo > opts.tolerance * 1e-3) {
      const double mid = 0.5 * (lo + hi);
      const double fm = f(mid);
      if ((fm < 0.0) == (flo < 0.0) && fm != 0.0) {
        lo = mid;
        flo = fm;
      } else {
        hi = mid;
      }
    }
    const double root = 0.5 * (lo + hi);
    (pre_changes ? pre_threshold : post_threshold) = root;
    return root;
  };

  const double region_lo = first == 0 ? y_range.lo : boundary(first - 1, first);
  const double region_hi = last + 1 == n ? y_range.hi : boundary(last, last + 1);
  double y = 0.5 * (region_lo + region_hi);
  double p = pre(y), q = post(y);
  if (!(p * q < 0.0)) {
    y = ys[(first + last) / 2];
    p = pres[(first + last) / 2];
    q = posts[(first + last) / 2];
  }
  return FlipReport{spec, a, b, t, y, p, q, region_lo, region_hi, pre_threshold, post_threshold};
}

/// CRPS is convex in the outcome with derivative 2F - 1, so its minimiser is
/// the sign change of that derivative. Bisecting on the sign (computed without
/// cancellation) stays correct where CRPS is flat to machine precision, as on
/// zero-density plateaus around the median.
template <UnivariateDensity D>
double crps_argmin_outcome(const D& d, Envelope range, double tolerance = 1e-9) {
  if (!(range.lo < range.hi)) throw ValidationError("crps argmin: range must have lo < hi");
  if (crps_outcome_derivative(d, range.lo) > 0.0 || crps_outcome_derivative(d, range.hi) < 0.0)
    throw DomainError("crps argmin: search range does not bracket the median");
  double a = range.lo, b = range.hi;
  while (b - a > tolerance) {
    const double mid = 0.5 * (a + b);
    if (!(a < mid && mid < b)) break;
    const double g = crps_outcome_derivative(d, mid);
    if (g == 0.0) return mid;
    (g < 0.0 ? a : b) = mid;
  }
  return 0.5 * (a + b);
}

}  // namespace psl
