#pragma once

#include <cmath>
#include <numbers>

namespace psl::normal {

inline constexpr double inv_sqrt_2pi = 0.398942280401432677939946059934381868;
inline constexpr double log_sqrt_2pi = 0.918938533204672741780329736405617640;
inline constexpr double inv_sqrt2 = 0.707106781186547524400844362104849039;

inline double pdf(double z) { return inv_sqrt_2pi * std::exp(-0.5 * z * z); }

inline double log_pdf(double z) { return -0.5 * z * z - log_sqrt_2pi; }

inline double cdf(double z) { return 0.5 * std::erfc(-z * inv_sqrt2); }

/// Upper tail 1 - cdf(z), accurate for large positive z.
inline double sf(double z) { return 0.5 * std::erfc(z * inv_sqrt2); }

/// log(1 - cdf(z)); stays finite far past the point where sf underflows.
inline double log_sf(double z) {
  if (z < 5.0) return std::log(sf(z));
  // Laplace continued fraction for the Mills ratio: sf(z) = pdf(z) / (z + 1/(z + 2/(z + ...))).
  double t = z;
  for (int k = 80; k >= 1; --k) t = z + k / t;
  return log_pdf(z) - std::log(t);
}

}  // namespace psl::normal
