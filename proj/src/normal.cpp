#include "absorb/normal.hpp"

#include <boost/math/special_functions/erf.hpp>
#include <stdexcept>

namespace absorb {

double log_norm_cdf(double x) {
  if (std::isnan(x)) return x;
  if (x > 5.0) return std::log1p(-norm_sf(x));
  if (x > -37.0) return std::log(norm_cdf(x));
  // Asymptotic expansion of the Mills ratio.
  const double inv2 = 1.0 / (x * x);
  const double series = 1.0 - inv2 * (1.0 - 3.0 * inv2 * (1.0 - 5.0 * inv2 * (1.0 - 7.0 * inv2)));
  return log_std_norm_pdf(x) - std::log(-x) + std::log(series);
}

double norm_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    if (p == 0.0) return kNegInf;
    if (p == 1.0) return kInf;
    throw std::domain_error("norm_quantile: p outside [0, 1]");
  }
  if (p < 0.5) return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
  return std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * (1.0 - p));
}

}  // namespace absorb
