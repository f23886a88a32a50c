#pragma once

// Adaptive Gauss-Kronrod (7/15) integration.
//
// Panels are refined globally: the panel with the largest error estimate is
// bisected until the summed error meets max(abs_tol, rel_tol * |value|). The
// error estimate of a panel is |K15 - G7| with no heuristic rescaling, so
// reported bounds are conservative.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <queue>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "psl/errors.hpp"

namespace psl {

struct QuadratureOptions {
  double abs_tol = 1e-10;
  double rel_tol = 1e-9;
  std::size_t max_subdivisions = 100000;
};

struct IntegrationResult {
  double value = 0.0;
  double error_estimate = 0.0;
  std::size_t subdivisions = 0;
};

/// Thrown when the subdivision budget runs out; carries the best estimate.
class IntegrationError : public NumericalError {
 public:
  IntegrationError(const std::string& what, IntegrationResult best)
      : NumericalError(what), best_(best) {}
  const IntegrationResult& best_estimate() const noexcept { return best_; }

 private:
  IntegrationResult best_;
};

/// The integrand returned NaN or infinity at a node.
class NonFiniteIntegrand : public NumericalError {
 public:
  NonFiniteIntegrand(const std::string& what, double x)
      : NumericalError(what), x_(x) {}
  double where() const noexcept { return x_; }

 private:
  double x_;
};

namespace detail {

struct Panel {
  double lo;
  double hi;
  double value;
  double error;
};

struct PanelOrder {
  bool operator()(const Panel& a, const Panel& b) const {
    if (a.error != b.error) return a.error < b.error;
    return a.lo > b.lo;
  }
};

inline constexpr double kronrod_nodes[8] = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};

inline constexpr double kronrod_weights[8] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};

// Gauss weights for kronrod_nodes[1], [3], [5], [7].
inline constexpr double gauss_weights[4] = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

template <class F>
double checked_eval(F& f, double x) {
  const double v = static_cast<double>(f(x));
  if (!std::isfinite(v)) {
    std::ostringstream msg;
    msg << "integrand is not finite at x = " << x;
    throw NonFiniteIntegrand(msg.str(), x);
  }
  return v;
}

template <class F>
Panel gauss_kronrod_15(F& f, double lo, double hi) {
  const double center = 0.5 * (lo + hi);
  const double half = 0.5 * (hi - lo);

  const double fc = checked_eval(f, center);
  double kronrod = kronrod_weights[7] * fc;
  double gauss = gauss_weights[3] * fc;
  for (int i = 0; i < 7; ++i) {
    const double dx = half * kronrod_nodes[i];
    const double pair = checked_eval(f, center - dx) + checked_eval(f, center + dx);
    kronrod += kronrod_weights[i] * pair;
    if (i % 2 == 1) gauss += gauss_weights[i / 2] * pair;
  }
  kronrod *= half;
  gauss *= half;
  return Panel{lo, hi, kronrod, std::abs(kronrod - gauss)};
}

}  // namespace detail

/// Integrate f over the union of consecutive panels [b0,b1], [b1,b2], ...
/// Breakpoints must be finite and strictly increasing; at least two needed.
template <class F>
IntegrationResult integrate(F&& f, std::span<const double> breakpoints,
                            const QuadratureOptions& opts = {}) {
  if (breakpoints.size() < 2) throw DomainError("integrate: need at least two breakpoints");
  for (std::size_t i = 0; i < breakpoints.size(); ++i) {
    if (!std::isfinite(breakpoints[i])) throw DomainError("integrate: bounds must be finite");
    if (i > 0 && !(breakpoints[i - 1] < breakpoints[i]))
      throw DomainError("integrate: breakpoints must be strictly increasing (lo < hi)");
  }

  std::priority_queue<detail::Panel, std::vector<detail::Panel>, detail::PanelOrder> queue;
  std::vector<detail::Panel> settled;
  double value = 0.0;
  double error = 0.0;
  for (std::size_t i = 0; i + 1 < breakpoints.size(); ++i) {
    auto panel = detail::gauss_kronrod_15(f, breakpoints[i], breakpoints[i + 1]);
    value += panel.value;
    error += panel.error;
    queue.push(panel);
  }

  std::size_t subdivisions = 0;
  const auto target = [&] { return std::max(opts.abs_tol, opts.rel_tol * std::abs(value)); };
  while (error > target() && !queue.empty()) {
    if (subdivisions >= opts.max_subdivisions) {
      for (; !queue.empty(); queue.pop()) settled.push_back(queue.top());
      double total = 0.0;
      for (const auto& p : settled) total += p.value;
      throw IntegrationError("integrate: no convergence within the subdivision limit",
                             IntegrationResult{total, error, subdivisions});
    }
    const detail::Panel worst = queue.top();
    queue.pop();
    const double mid = 0.5 * (worst.lo + worst.hi);
    // Panel too narrow to split in floating point: keep its estimate as is.
    if (!(worst.lo < mid && mid < worst.hi)) {
      settled.push_back(worst);
      continue;
    }
    const auto left = detail::gauss_kronrod_15(f, worst.lo, mid);
    const auto right = detail::gauss_kronrod_15(f, mid, worst.hi);
    value += (left.value + right.value) - worst.value;
    error += (left.error + right.error) - worst.error;
    queue.push(left);
    queue.push(right);
    ++subdivisions;
  }

  // Re-sum in position order so the result does not carry drift from the
  // incremental updates above.
  for (; !queue.empty(); queue.pop()) settled.push_back(queue.top());
  std::sort(settled.begin(), settled.end(),
            [](const detail::Panel& a, const detail::Panel& b) { return a.lo < b.lo; });
  double total = 0.0;
  double total_error = 0.0;
  for (const auto& p : settled) {
    total += p.value;
    total_error += p.error;
  }
  return IntegrationResult{total, total_error, subdivisions};
}

template <class F>
IntegrationResult integrate(F&& f, double lo, double hi, const QuadratureOptions& opts = {}) {
  const double bounds[2] = {lo, hi};
  return integrate(std::forward<F>(f), std::span<const double>(bounds), opts);
}

/// Sorted, de-duplicated breakpoints from `points`, clipped to [lo, hi] and
/// always including both ends.
inline std::vector<double> make_breakpoints(std::vector<double> points, double lo, double hi) {
  if (!(lo < hi)) throw DomainError("make_breakpoints: lo must be less than hi");
  std::vector<double> out;
  out.reserve(points.size() + 2);
  out.push_back(lo);
  for (double p : points)
    if (std::isfinite(p) && p > lo && p < hi) out.push_back(p);
  out.push_back(hi);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace psl
