#pragma once

// Reference values computed without the library: series erf, composite
// Simpson, closed-form Gaussian identities, plain Monte Carlo.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <vector>

namespace oracle {

inline constexpr double pi = std::numbers::pi;

/// erf(x) = 2/sqrt(pi) exp(-x^2) sum_n 2^n x^(2n+1) / (1*3*...*(2n+1)).
/// All terms positive, so no cancellation.
inline double erf_series(double x) {
  if (x < 0) return -erf_series(-x);
  if (x > 6.0) return 1.0;
  double term = x;
  double sum = x;
  for (int n = 1; n < 500; ++n) {
    term *= 2.0 * x * x / (2.0 * n + 1.0);
    sum += term;
    if (term < 1e-18 * sum) break;
  }
  return 2.0 / std::sqrt(pi) * std::exp(-x * x) * sum;
}

inline double phi(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * pi); }

inline double Phi(double z) { return 0.5 * (1.0 + erf_series(z / std::sqrt(2.0))); }

inline double normal_pdf(double x, double mu, double sd) { return phi((x - mu) / sd) / sd; }

/// Standard normal quantile by bisection on the series CDF.
inline double Phi_inv(double p) {
  double lo = -10.0, hi = 10.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (Phi(mid) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

/// CRPS of N(mu, sd^2) at y, in the expected-absolute-difference form
/// E|X - y| - 0.5 E|X - X'| with E|X - X'| = 2 sd / sqrt(pi).
inline double crps_normal(double mu, double sd, double y) {
  const double z = (y - mu) / sd;
  const double e_abs = sd * (z * (2.0 * Phi(z) - 1.0) + 2.0 * phi(z));  // folded-normal mean
  return e_abs - sd / std::sqrt(pi);
}

/// E_{N(0,1)}[-log2 N(y; 0, s^2)].
inline double cross_entropy_bits(double s) {
  return (0.5 * std::log(2.0 * pi * s * s) + 0.5 / (s * s)) / std::numbers::ln2;
}

/// Int N(x; m1, s1^2) N(x; m2, s2^2) dx = N(m1 - m2; 0, s1^2 + s2^2).
inline double gaussian_overlap(double m1, double s1, double m2, double s2) {
  return normal_pdf(m1 - m2, 0.0, std::sqrt(s1 * s1 + s2 * s2));
}

/// Int N(x; 0, s^2)^a dx = (2 pi s^2)^((1-a)/2) / sqrt(a).
inline double gaussian_power_integral(double s, double a) {
  return std::pow(2.0 * pi * s * s, 0.5 * (1.0 - a)) / std::sqrt(a);
}

/// Composite Simpson with n (even) panels.
inline double simpson(const std::function<double(double)>& f, double a, double b, int n = 20000) {
  if (n % 2) ++n;
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
  return s * h / 3.0;
}

struct Gaussian {
  double w, mu, sd;
};

/// 1 to 3 components, means in [-3, 3], log-uniform sd in [0.1, 3].
inline std::vector<Gaussian> random_mixture(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> k(1, 3);
  std::uniform_real_distribution<double> mu(-3.0, 3.0), logsd(std::log(0.1), std::log(3.0)), w(0.2, 1.0);
  std::vector<Gaussian> m(k(rng));
  double total = 0.0;
  for (auto& g : m) {
    g = {w(rng), mu(rng), std::exp(logsd(rng))};
    total += g.w;
  }
  double rest = 1.0;
  for (std::size_t i = 0; i + 1 < m.size(); ++i) rest -= (m[i].w /= total);
  m.back().w = rest;
  return m;
}

inline double mixture_pdf(const std::vector<Gaussian>& m, double x) {
  double s = 0.0;
  for (const auto& c : m) s += c.w * normal_pdf(x, c.mu, c.sd);
  return s;
}

inline double mixture_cdf(const std::vector<Gaussian>& m, double x) {
  double s = 0.0;
  for (const auto& c : m) s += c.w * Phi((x - c.mu) / c.sd);
  return s;
}

/// Mixture CRPS via E|X - y| - 0.5 E|X - X'| using the closed form for each
/// pair of components: E|N(m, v)| = sqrt(v) (z(2 Phi(z) - 1) + 2 phi(z)), z = m / sqrt(v).
inline double crps_mixture(const std::vector<Gaussian>& m, double y) {
  const auto abs_mean = [](double mean, double var) {
    const double s = std::sqrt(var);
    const double z = mean / s;
    return s * (z * (2.0 * Phi(z) - 1.0) + 2.0 * phi(z));
  };
  double first = 0.0;
  for (const auto& c : m) first += c.w * abs_mean(c.mu - y, c.sd * c.sd);
  double second = 0.0;
  for (const auto& a : m)
    for (const auto& b : m) second += a.w * b.w * abs_mean(a.mu - b.mu, a.sd * a.sd + b.sd * b.sd);
  return first - 0.5 * second;
}

/// erfc(x) for x >= 0: series complement below 2, continued fraction above.
inline double erfc_pos(double x) {
  if (x < 2.0) return 1.0 - erf_series(x);
  double t = x;
  for (int k = 300; k >= 1; --k) t = x + 0.5 * k / t;
  return std::exp(-x * x) / (std::sqrt(pi) * t);
}

/// Upper normal tail Q(z) = 1 - Phi(z) for z >= 0, accurate far out.
inline double upper_tail(double z) { return 0.5 * erfc_pos(z / std::sqrt(2.0)); }

/// log Q(t) for t >= 0. Far out, Q(t) = phi(t) * Int_0^inf exp(-t u - u^2/2) du
/// and the integral is done by Simpson, so nothing underflows.
inline double log_upper_tail(double t) {
  if (t < 5.0) return std::log(upper_tail(t));
  const double mills = simpson([t](double u) { return std::exp(-t * u - 0.5 * u * u); }, 0.0, 60.0 / t, 20000);
  return -0.5 * t * t - 0.5 * std::log(2.0 * pi) + std::log(mills);
}

/// F(x) - 1/2 grouped by side so that balanced weights cancel exactly and
/// only the (tiny) tail terms remain. When those underflow, only the sign
/// is meaningful and comes from comparing the tail sums in log space.
inline double mixture_cdf_minus_half(const std::vector<Gaussian>& m, double x) {
  double w_right = 0.0, w_left = 0.0, tails = 0.0;
  std::vector<double> log_lower, log_upper;
  for (const auto& c : m) {
    const double z = (x - c.mu) / c.sd;
    if (z >= 0) {
      w_right += c.w;
      tails -= c.w * upper_tail(z);
      log_upper.push_back(std::log(c.w) + log_upper_tail(z));
    } else {
      w_left += c.w;
      tails += c.w * upper_tail(-z);
      log_lower.push_back(std::log(c.w) + log_upper_tail(-z));
    }
  }
  double settled = 0.5 * (w_right - w_left);
  if (std::abs(settled) < 1e-15) settled = 0.0;  // equal masses up to rounding
  if (settled != 0.0 || std::abs(tails) > 1e-300) return settled + tails;
  const auto log_sum = [](const std::vector<double>& v) {
    if (v.empty()) return -std::numeric_limits<double>::infinity();
    double top = v[0];
    for (double a : v) top = std::max(top, a);
    double s = 0.0;
    for (double a : v) s += std::exp(a - top);
    return top + std::log(s);
  };
  const double lo = log_sum(log_lower), up = log_sum(log_upper);
  return lo == up ? 0.0 : lo > up ? 1e-300 : -1e-300;
}

inline double mixture_median(const std::vector<Gaussian>& m) {
  double lo = -100.0, hi = 100.0;
  for (int i = 0; i < 300; ++i) {
    const double mid = 0.5 * (lo + hi);
    (mixture_cdf_minus_half(m, mid) < 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace oracle
