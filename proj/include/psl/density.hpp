#pragma once

// Univariate forecast densities: Gaussian mixtures, piecewise-uniform tables,
// and their pushforwards through smooth monotone transforms.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "psl/errors.hpp"
#include "psl/normal.hpp"
#include "psl/quadrature.hpp"

namespace psl {

/// Closed interval [lo, hi] outside which a density is treated as zero.
struct Envelope {
  double lo;
  double hi;
  bool operator==(const Envelope&) const = default;
};

/// Half-width of the truncated support of a Gaussian component, in stddevs.
inline constexpr double support_sigmas = 12.0;

struct GaussianComponent {
  double weight = 1.0;
  double mean = 0.0;
  double stddev = 1.0;
  bool operator==(const GaussianComponent&) const = default;
};

namespace detail {

inline void require_finite(double x, const char* what) {
  if (!std::isfinite(x)) {
    std::ostringstream msg;
    msg << what << ": argument must be finite";
    throw DomainError(msg.str());
  }
}

}  // namespace detail

class MixtureDensity {
 public:
  enum class Kind { gaussian_mixture, piecewise_uniform };

  static MixtureDensity gaussian_mixture(std::vector<GaussianComponent> components) {
    if (components.empty()) throw ValidationError("mixture needs at least one component");
    double total = 0.0;
    for (const auto& c : components) {
      if (!std::isfinite(c.mean)) throw ValidationError("component mean must be finite");
      if (!(c.stddev > 0.0) || !std::isfinite(c.stddev))
        throw ValidationError("stddev must be positive");
      if (!(c.weight >= 0.0 && c.weight <= 1.0)) throw ValidationError("weight must lie in [0, 1]");
      total += c.weight;
    }
    if (std::abs(total - 1.0) > 1e-12) throw ValidationError("weights must sum to 1");
    MixtureDensity d;
    d.kind_ = Kind::gaussian_mixture;
    d.components_ = std::move(components);
    return d;
  }

  static MixtureDensity normal(double mean, double stddev) {
    return gaussian_mixture({GaussianComponent{1.0, mean, stddev}});
  }

  /// Segment i covers [breaks[i], breaks[i+1]) and carries masses[i].
  static MixtureDensity piecewise_uniform(std::vector<double> breaks, std::vector<double> masses) {
    if (breaks.size() < 2) throw ValidationError("piecewise_uniform needs at least two breaks");
    if (masses.size() + 1 != breaks.size())
      throw ValidationError("piecewise_uniform needs one mass per segment");
    for (std::size_t i = 0; i < breaks.size(); ++i) {
      if (!std::isfinite(breaks[i])) throw ValidationError("breaks must be finite");
      if (i > 0 && !(breaks[i - 1] < breaks[i]))
        throw ValidationError("breaks must be strictly increasing");
    }
    double total = 0.0;
    for (double m : masses) {
      if (!(m >= 0.0) || !std::isfinite(m)) throw ValidationError("masses must be non-negative");
      total += m;
    }
    if (std::abs(total - 1.0) > 1e-12) throw ValidationError("masses must sum to 1");
    MixtureDensity d;
    d.kind_ = Kind::piecewise_uniform;
    d.breaks_ = std::move(breaks);
    d.masses_ = std::move(masses);
    return d;
  }

  static MixtureDensity uniform(double lo, double hi) { return piecewise_uniform({lo, hi}, {1.0}); }

  Kind kind() const noexcept { return kind_; }
  const std::vector<GaussianComponent>& components() const noexcept { return components_; }
  const std::vector<double>& breaks() const noexcept { return breaks_; }
  const std::vector<double>& masses() const noexcept { return masses_; }

  /// A Gaussian mixture whose mass sits in a single component.
  bool is_single_gaussian() const noexcept {
    if (kind_ != Kind::gaussian_mixture) return false;
    return std::count_if(components_.begin(), components_.end(),
                         [](const auto& c) { return c.weight > 0.0; }) == 1;
  }

  /// The component carrying all the mass; only meaningful when is_single_gaussian().
  const GaussianComponent& dominant_component() const {
    return *std::max_element(components_.begin(), components_.end(),
                             [](const auto& a, const auto& b) { return a.weight < b.weight; });
  }

  double pdf(double x) const {
    detail::require_finite(x, "pdf");
    if (kind_ == Kind::piecewise_uniform) {
      const auto seg = segment(x);
      return seg < 0 ? 0.0 : masses_[seg] / (breaks_[seg + 1] - breaks_[seg]);
    }
    double sum = 0.0;
    for (const auto& c : components_) {
      if (c.weight == 0.0) continue;
      sum += c.weight * normal::pdf((x - c.mean) / c.stddev) / c.stddev;
    }
    return sum;
  }

  /// log pdf(x); -infinity where the density vanishes. Gaussian mixtures use
  /// log-sum-exp so far tails do not underflow.
  double log_pdf(double x) const {
    detail::require_finite(x, "log_pdf");
    if (kind_ == Kind::piecewise_uniform) return std::log(pdf(x));
    double peak = -std::numeric_limits<double>::infinity();
    for (const auto& c : components_) {
      if (c.weight == 0.0) continue;
      peak = std::max(peak, component_log_pdf(c, x));
    }
    double sum = 0.0;
    for (const auto& c : components_) {
      if (c.weight == 0.0) continue;
      sum += std::exp(component_log_pdf(c, x) - peak);
    }
    return peak + std::log(sum);
  }

  double cdf(double x) const {
    detail::require_finite(x, "cdf");
    if (kind_ == Kind::piecewise_uniform) return uniform_cdf(x);
    double sum = 0.0;
    for (const auto& c : components_) sum += c.weight * normal::cdf((x - c.mean) / c.stddev);
    return std::clamp(sum, 0.0, 1.0);
  }

  /// 1 - cdf(x), summed from the upper tails.
  double sf(double x) const {
    detail::require_finite(x, "sf");
    if (kind_ == Kind::piecewise_uniform) return 1.0 - uniform_cdf(x);
    double sum = 0.0;
    for (const auto& c : components_) sum += c.weight * normal::sf((x - c.mean) / c.stddev);
    return std::clamp(sum, 0.0, 1.0);
  }

  /// cdf(x) - p without cancellation: components above x contribute their
  /// weight minus an upper tail, so tail masses far below p survive. This
  /// keeps the sign right on near-zero-density plateaus between modes.
  double cdf_excess(double x, double p) const {
    detail::require_finite(x, "cdf_excess");
    if (kind_ == Kind::piecewise_uniform) return uniform_cdf(x) - p;
    double settled = -p;
    double lower_tails = 0.0;
    double upper_tails = 0.0;
    for (const auto& c : components_) {
      const double z = (x - c.mean) / c.stddev;
      if (z >= 0.0) {
        settled += c.weight;
        upper_tails += c.weight * normal::sf(z);
      } else {
        lower_tails += c.weight * normal::cdf(z);
      }
    }
    // Weights are only good to rounding; an imbalance that small is no imbalance.
    const double rounding = 4.0 * std::numeric_limits<double>::epsilon() * static_cast<double>(components_.size());
    if (std::abs(settled) <= rounding) settled = 0.0;
    const double excess = settled + (lower_tails - upper_tails);
    if (settled != 0.0 || (excess != 0.0 && std::abs(excess) >= std::numeric_limits<double>::min())) return excess;
    // Balanced weights and tails below the normal range: compare the tail sums
    // in log space so the sign survives. The magnitude is then a floor.
    double log_lower = -std::numeric_limits<double>::infinity();
    double log_upper = log_lower;
    const auto log_add = [](double a, double b) {
      if (a < b) std::swap(a, b);
      return b == -std::numeric_limits<double>::infinity() ? a : a + std::log1p(std::exp(b - a));
    };
    for (const auto& c : components_) {
      if (c.weight == 0.0) continue;
      const double z = (x - c.mean) / c.stddev;
      if (z >= 0.0)
        log_upper = log_add(log_upper, std::log(c.weight) + normal::log_sf(z));
      else
        log_lower = log_add(log_lower, std::log(c.weight) + normal::log_sf(-z));
    }
    if (log_lower == log_upper) return 0.0;
    const double sign = log_lower > log_upper ? 1.0 : -1.0;
    const double v = std::exp(std::max(log_lower, log_upper)) * -std::expm1(-std::abs(log_lower - log_upper));
    return sign * std::max(v, std::numeric_limits<double>::denorm_min());
  }

  Envelope support() const {
    if (kind_ == Kind::piecewise_uniform) return {breaks_.front(), breaks_.back()};
    Envelope e{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
    for (const auto& c : components_) {
      if (c.weight == 0.0) continue;
      e.lo = std::min(e.lo, c.mean - support_sigmas * c.stddev);
      e.hi = std::max(e.hi, c.mean + support_sigmas * c.stddev);
    }
    return e;
  }

  /// Quadrature seeds: component means +- {0, 1, 3, 6, 9, 12} stddevs, or the breaks.
  /// Seeds out to the support edge keep tail mass from hiding inside a wide panel.
  std::vector<double> panel_points() const {
    if (kind_ == Kind::piecewise_uniform) return breaks_;
    std::vector<double> pts;
    for (const auto& c : components_) {
      if (c.weight == 0.0) continue;
      for (double k : {-12.0, -9.0, -6.0, -3.0, -1.0, 0.0, 1.0, 3.0, 6.0, 9.0, 12.0}) pts.push_back(c.mean + k * c.stddev);
    }
    return pts;
  }

  /// Fill `out` with independent draws: component by weight, then a
  /// Gaussian or uniform draw within it.
  template <class URBG>
  void sample_into(URBG& rng, std::span<double> out) const {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<double> weights = masses_;
    if (kind_ == Kind::gaussian_mixture)
      for (const auto& c : components_) weights.push_back(c.weight);
    std::vector<double> cumulative(weights.size());
    std::partial_sum(weights.begin(), weights.end(), cumulative.begin());
    for (double& x : out) {
      const double u = unit(rng) * cumulative.back();
      auto idx = static_cast<std::size_t>(
          std::upper_bound(cumulative.begin(), cumulative.end(), u) - cumulative.begin());
      idx = std::min(idx, weights.size() - 1);
      while (weights[idx] == 0.0 && idx > 0) --idx;
      if (kind_ == Kind::piecewise_uniform) {
        x = breaks_[idx] + unit(rng) * (breaks_[idx + 1] - breaks_[idx]);
      } else {
        x = components_[idx].mean + components_[idx].stddev * gauss(rng);
      }
    }
  }

  bool operator==(const MixtureDensity&) const = default;

 private:
  MixtureDensity() = default;

  static double component_log_pdf(const GaussianComponent& c, double x) {
    return std::log(c.weight) + normal::log_pdf((x - c.mean) / c.stddev) - std::log(c.stddev);
  }

  // Index of the segment containing x, or -1 outside [breaks.front, breaks.back).
  std::ptrdiff_t segment(double x) const {
    if (x < breaks_.front() || x >= breaks_.back()) return -1;
    return std::upper_bound(breaks_.begin(), breaks_.end(), x) - breaks_.begin() - 1;
  }

  double uniform_cdf(double x) const {
    if (x <= breaks_.front()) return 0.0;
    if (x >= breaks_.back()) return 1.0;
    const auto seg = segment(x);
    double below = 0.0;
    for (std::ptrdiff_t i = 0; i < seg; ++i) below += masses_[i];
    const double frac = (x - breaks_[seg]) / (breaks_[seg + 1] - breaks_[seg]);
    return std::clamp(below + masses_[seg] * frac, 0.0, 1.0);
  }

  Kind kind_ = Kind::gaussian_mixture;
  std::vector<GaussianComponent> components_;
  std::vector<double> breaks_;
  std::vector<double> masses_;
};

/// Smooth strictly monotone map x* = forward(x) with known inverse and
/// inverse derivative. `range` is the open image interval of the real line.
class Transform {
 public:
  enum class Kind { identity, affine, cubic, exponential, custom };
  using Map = std::function<double(double)>;

  static Transform identity() {
    return Transform(Kind::identity, {}, true, full_line(), [](double x) { return x; },
                     [](double y) { return y; }, [](double) { return 1.0; });
  }

  /// x* = scale * x + shift, scale != 0.
  static Transform affine(double scale, double shift) {
    if (!(scale != 0.0) || !std::isfinite(scale) || !std::isfinite(shift))
      throw ValidationError("affine transform needs a finite non-zero scale");
    return Transform(
        Kind::affine, {scale, shift}, scale > 0.0, full_line(),
        [scale, shift](double x) { return scale * x + shift; },
        [scale, shift](double y) { return (y - shift) / scale; },
        [scale](double) { return 1.0 / scale; });
  }

  /// x* = x^3. The inverse derivative is singular at 0.
  static Transform cubic() {
    return Transform(
        Kind::cubic, {}, true, full_line(), [](double x) { return x * x * x; },
        [](double y) { return std::cbrt(y); },
        [](double y) {
          const double r = std::cbrt(y);
          return 1.0 / (3.0 * r * r);
        });
  }

  /// x* = exp(rate * x), rate != 0; image (0, inf).
  static Transform exponential(double rate = 1.0) {
    if (!(rate != 0.0) || !std::isfinite(rate))
      throw ValidationError("exponential transform needs a finite non-zero rate");
    return Transform(
        Kind::exponential, {rate}, rate > 0.0,
        Envelope{0.0, std::numeric_limits<double>::infinity()},
        [rate](double x) { return std::exp(rate * x); },
        [rate](double y) { return std::log(y) / rate; },
        [rate](double y) { return 1.0 / (rate * y); });
  }

  static Transform custom(Map forward, Map inverse, Map inverse_derivative, bool increasing,
                          Envelope range = full_line()) {
    return Transform(Kind::custom, {}, increasing, range, std::move(forward), std::move(inverse),
                     std::move(inverse_derivative));
  }

  double forward(double x) const { return forward_(x); }
  double inverse(double y) const { return inverse_(y); }
  double inverse_derivative(double y) const { return inverse_derivative_(y); }
  bool increasing() const noexcept { return increasing_; }
  Kind kind() const noexcept { return kind_; }
  const std::vector<double>& params() const noexcept { return params_; }
  Envelope range() const noexcept { return range_; }
  bool in_range(double y) const noexcept { return y > range_.lo && y < range_.hi; }

  std::string name() const {
    switch (kind_) {
      case Kind::identity: return "identity";
      case Kind::affine: return "affine";
      case Kind::cubic: return "cubic";
      case Kind::exponential: return "exp";
      case Kind::custom: return "custom";
    }
    return "custom";
  }

  /// Built-in transforms compare by kind and parameters; custom ones never compare equal.
  bool operator==(const Transform& other) const {
    return kind_ != Kind::custom && kind_ == other.kind_ && params_ == other.params_;
  }

 private:
  static Envelope full_line() {
    return {-std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
  }

  Transform(Kind kind, std::vector<double> params, bool increasing, Envelope range, Map forward,
            Map inverse, Map inverse_derivative)
      : kind_(kind),
        params_(std::move(params)),
        increasing_(increasing),
        range_(range),
        forward_(std::move(forward)),
        inverse_(std::move(inverse)),
        inverse_derivative_(std::move(inverse_derivative)) {}

  Kind kind_;
  std::vector<double> params_;
  bool increasing_;
  Envelope range_;
  Map forward_;
  Map inverse_;
  Map inverse_derivative_;
};

/// Density of forward(X) for X ~ base.
class TransformedDensity {
 public:
  TransformedDensity(MixtureDensity base, Transform transform)
      : base_(std::move(base)), transform_(std::move(transform)) {}

  const MixtureDensity& base() const noexcept { return base_; }
  const Transform& transform() const noexcept { return transform_; }

  double pdf(double y) const {
    detail::require_finite(y, "pdf");
    if (!transform_.in_range(y)) return 0.0;
    const double base_pdf = base_.pdf(transform_.inverse(y));
    if (base_pdf == 0.0) return 0.0;
    return base_pdf * std::abs(transform_.inverse_derivative(y));
  }

  double log_pdf(double y) const {
    detail::require_finite(y, "log_pdf");
    if (!transform_.in_range(y)) return -std::numeric_limits<double>::infinity();
    return base_.log_pdf(transform_.inverse(y)) +
           std::log(std::abs(transform_.inverse_derivative(y)));
  }

  double cdf(double y) const {
    detail::require_finite(y, "cdf");
    if (y <= transform_.range().lo) return 0.0;
    if (y >= transform_.range().hi) return 1.0;
    const double x = transform_.inverse(y);
    return transform_.increasing() ? base_.cdf(x) : base_.sf(x);
  }

  double sf(double y) const {
    detail::require_finite(y, "sf");
    if (y <= transform_.range().lo) return 1.0;
    if (y >= transform_.range().hi) return 0.0;
    const double x = transform_.inverse(y);
    return transform_.increasing() ? base_.sf(x) : base_.cdf(x);
  }

  double cdf_excess(double y, double p) const {
    detail::require_finite(y, "cdf_excess");
    if (y <= transform_.range().lo) return -p;
    if (y >= transform_.range().hi) return 1.0 - p;
    const double x = transform_.inverse(y);
    // Decreasing maps: F*(y) = 1 - F(x), so F*(y) - p = -(F(x) - (1 - p)).
    return transform_.increasing() ? base_.cdf_excess(x, p) : -base_.cdf_excess(x, 1.0 - p);
  }

  Envelope support() const {
    const auto e = base_.support();
    const double a = transform_.forward(e.lo);
    const double b = transform_.forward(e.hi);
    return {std::min(a, b), std::max(a, b)};
  }

  std::vector<double> panel_points() const {
    auto pts = base_.panel_points();
    for (double& p : pts) p = transform_.forward(p);
    return pts;
  }

  template <class URBG>
  void sample_into(URBG& rng, std::span<double> out) const {
    base_.sample_into(rng, out);
    for (double& x : out) x = transform_.forward(x);
  }

  bool operator==(const TransformedDensity&) const = default;

 private:
  MixtureDensity base_;
  Transform transform_;
};

/// Either kind of density behind one value type; used wherever densities
/// arrive at run time (JSON, archives, CLI).
class AnyDensity {
 public:
  AnyDensity(MixtureDensity d) : impl_(std::move(d)) {}       // NOLINT(google-explicit-constructor)
  AnyDensity(TransformedDensity d) : impl_(std::move(d)) {}   // NOLINT(google-explicit-constructor)

  double pdf(double x) const { return std::visit([x](const auto& d) { return d.pdf(x); }, impl_); }
  double log_pdf(double x) const { return std::visit([x](const auto& d) { return d.log_pdf(x); }, impl_); }
  double cdf(double x) const { return std::visit([x](const auto& d) { return d.cdf(x); }, impl_); }
  double sf(double x) const { return std::visit([x](const auto& d) { return d.sf(x); }, impl_); }
  double cdf_excess(double x, double p) const {
    return std::visit([x, p](const auto& d) { return d.cdf_excess(x, p); }, impl_);
  }
  Envelope support() const { return std::visit([](const auto& d) { return d.support(); }, impl_); }
  std::vector<double> panel_points() const {
    return std::visit([](const auto& d) { return d.panel_points(); }, impl_);
  }
  template <class URBG>
  void sample_into(URBG& rng, std::span<double> out) const {
    std::visit([&](const auto& d) { d.sample_into(rng, out); }, impl_);
  }

  const MixtureDensity* mixture() const noexcept { return std::get_if<MixtureDensity>(&impl_); }
  const TransformedDensity* transformed() const noexcept {
    return std::get_if<TransformedDensity>(&impl_);
  }

  bool operator==(const AnyDensity&) const = default;

 private:
  std::variant<MixtureDensity, TransformedDensity> impl_;
};

template <class D>
concept UnivariateDensity = requires(const D& d, double x, std::mt19937_64& rng,
                                     std::span<double> out) {
  { d.pdf(x) } -> std::convertible_to<double>;
  { d.log_pdf(x) } -> std::convertible_to<double>;
  { d.cdf(x) } -> std::convertible_to<double>;
  { d.sf(x) } -> std::convertible_to<double>;
  { d.cdf_excess(x, x) } -> std::convertible_to<double>;
  { d.support() } -> std::same_as<Envelope>;
  { d.panel_points() } -> std::same_as<std::vector<double>>;
  d.sample_into(rng, out);
};

// ---------------------------------------------------------------------------
// Free-function surface.

template <UnivariateDensity D>
double pdf(const D& d, double x) {
  return d.pdf(x);
}

template <UnivariateDensity D>
double cdf(const D& d, double x) {
  return d.cdf(x);
}

/// Bracketed bisection on cdf(x) - p until the bracket is 1e-12 wide (or a
/// few ulps at large magnitude). No derivative use, so zero-density plateaus
/// are handled.
template <UnivariateDensity D>
double quantile(const D& d, double p) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("quantile: p must lie in (0, 1)");
  auto [lo, hi] = d.support();
  double width = std::max(hi - lo, 1.0);
  for (int i = 0; i < 64 && d.cdf_excess(lo, p) >= 0.0; ++i, width *= 2.0) lo -= width;
  for (int i = 0; i < 64 && d.cdf_excess(hi, p) < 0.0; ++i, width *= 2.0) hi += width;
  if (d.cdf_excess(lo, p) >= 0.0 || d.cdf_excess(hi, p) < 0.0)
    throw NumericalError("quantile: could not bracket the requested probability");
  for (int iter = 0; iter < 400; ++iter) {
    const double mid = 0.5 * (lo + hi);
    const double floor_width = 4.0 * std::numeric_limits<double>::epsilon() * std::abs(mid);
    if (hi - lo <= std::max(1e-12, floor_width) || !(lo < mid && mid < hi)) break;
    if (d.cdf_excess(mid, p) < 0.0)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

template <UnivariateDensity D>
double median(const D& d) {
  return quantile(d, 0.5);
}

/// n independent draws from a generator seeded with `seed`.
template <UnivariateDensity D>
std::vector<double> sample(const D& d, std::uint64_t seed, std::size_t n) {
  if (n == 0) throw DomainError("sample: n must be at least 1");
  std::mt19937_64 rng(seed);
  std::vector<double> out(n);
  d.sample_into(rng, std::span<double>(out));
  return out;
}

/// Breakpoints for integrating against d over its truncated support.
template <UnivariateDensity D>
std::vector<double> density_breakpoints(const D& d) {
  const auto e = d.support();
  return make_breakpoints(d.panel_points(), e.lo, e.hi);
}

/// Quadrature of pdf^alpha over the truncated support.
template <UnivariateDensity D>
double lp_norm_integral_quadrature(const D& d, double alpha, const QuadratureOptions& opts = {}) {
  if (!(alpha > 1.0) || !std::isfinite(alpha))
    throw DomainError("lp_norm_integral: alpha must be greater than 1");
  const auto bp = density_breakpoints(d);
  return integrate([&](double x) { return std::pow(d.pdf(x), alpha); }, std::span<const double>(bp),
                   opts)
      .value;
}

/// Closed form for one Gaussian component: (2 pi)^((1-a)/2) a^(-1/2) sigma^(1-a).
inline double gaussian_lp_norm_integral(double stddev, double alpha) {
  return std::pow(2.0 * std::numbers::pi, 0.5 * (1.0 - alpha)) / std::sqrt(alpha) *
         std::pow(stddev, 1.0 - alpha);
}

inline double lp_norm_integral(const MixtureDensity& d, double alpha,
                               const QuadratureOptions& opts = {}) {
  if (!(alpha > 1.0) || !std::isfinite(alpha))
    throw DomainError("lp_norm_integral: alpha must be greater than 1");
  if (d.is_single_gaussian()) return gaussian_lp_norm_integral(d.dominant_component().stddev, alpha);
  if (d.kind() == MixtureDensity::Kind::piecewise_uniform) {
    double sum = 0.0;
    for (std::size_t i = 0; i < d.masses().size(); ++i) {
      const double w = d.breaks()[i + 1] - d.breaks()[i];
      sum += std::pow(d.masses()[i], alpha) * std::pow(w, 1.0 - alpha);
    }
    return sum;
  }
  return lp_norm_integral_quadrature(d, alpha, opts);
}

template <UnivariateDensity D>
double lp_norm_integral(const D& d, double alpha, const QuadratureOptions& opts = {}) {
  if constexpr (std::same_as<D, AnyDensity>) {
    if (const auto* m = d.mixture()) return lp_norm_integral(*m, alpha, opts);
  }
  return lp_norm_integral_quadrature(d, alpha, opts);
}

/// E_d[f] by quadrature of f * pdf over the truncated support.
template <UnivariateDensity D, class F>
double expectation(const D& d, F&& f, const QuadratureOptions& opts = {}) {
  const auto bp = density_breakpoints(d);
  return integrate([&](double x) { return f(x) * d.pdf(x); }, std::span<const double>(bp), opts)
      .value;
}

/// Pushforward of d through t. Rejects maps that are not strictly monotone
/// (in the declared direction) over the truncated support of d.
inline TransformedDensity pushforward(const MixtureDensity& d, const Transform& t) {
  const auto e = d.support();
  constexpr int grid = 1001;
  double previous = 0.0;
  for (int i = 0; i < grid; ++i) {
    const double x = e.lo + (e.hi - e.lo) * i / (grid - 1);
    const double y = t.forward(x);
    if (!std::isfinite(y)) throw ValidationError("transform is not finite on the density support");
    if (i > 0) {
      const bool ok = t.increasing() ? y > previous : y < previous;
      if (!ok) throw ValidationError("transform is not strictly monotone on the density support");
    }
    previous = y;
  }
  return TransformedDensity(d, t);
}

}  // namespace psl
