#pragma once

#include <cmath>
#include <limits>
#include <numbers>

namespace absorb {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();
inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kLogSqrt2Pi = 0.91893853320467274178;
inline constexpr double kInvSqrt2 = 0.70710678118654752440;

/// Standard normal CDF.
inline double norm_cdf(double x) { return 0.5 * std::erfc(-x * kInvSqrt2); }

/// Upper tail 1 - Phi(x) without cancellation.
inline double norm_sf(double x) { return 0.5 * std::erfc(x * kInvSqrt2); }

/// log Phi(x), accurate in both tails (asymptotic series below -37).
double log_norm_cdf(double x);

/// Phi^{-1}(p) for p in (0,1).
double norm_quantile(double p);

inline double log_norm_pdf(double x, double mean, double sd) {
  const double z = (x - mean) / sd;
  return -0.5 * z * z - std::log(sd) - kLogSqrt2Pi;
}

inline double log_std_norm_pdf(double z) { return -0.5 * z * z - kLogSqrt2Pi; }

/// Log density of the half-Cauchy(0, scale) distribution on (0, inf).
inline double log_half_cauchy_pdf(double x, double scale) {
  if (!(x > 0.0)) return kNegInf;
  const double r = x / scale;
  return std::log(2.0 / std::numbers::pi) - std::log(scale) - std::log1p(r * r);
}

/// Log density of U(lo, hi) on the open interval.
inline double log_uniform_pdf(double x, double lo, double hi) {
  if (!(x > lo && x < hi)) return kNegInf;
  return -std::log(hi - lo);
}

}  // namespace absorb
