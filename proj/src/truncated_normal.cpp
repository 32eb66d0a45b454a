#include "absorb/truncated_normal.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "absorb/normal.hpp"

namespace absorb {

namespace {

constexpr double kTinyMass = 1e-300;

// Standard normal restricted to (alpha, beta) with 0 <= alpha < beta <= inf.
double tail_rejection(double alpha, double beta, RandomStream& rng) {
  if (beta - alpha < 1.0 / std::max(alpha, 1.0)) {
    // Nearly flat over a short interval: uniform proposal.
    for (;;) {
      const double x = rng.uniform(alpha, beta);
      if (std::log(rng.uniform()) < 0.5 * (alpha * alpha - x * x)) return x;
    }
  }
  // Robert (1995) translated-exponential proposal.
  const double rate = 0.5 * (alpha + std::sqrt(alpha * alpha + 4.0));
  for (;;) {
    const double x = alpha - std::log(rng.uniform()) / rate;
    if (x >= beta) continue;
    const double d = x - rate;
    if (std::log(rng.uniform()) < -0.5 * d * d) return x;
  }
}

double clamp_open(double x, double a, double b) {
  if (x <= a) return std::nextafter(a, b);
  if (x >= b) return std::nextafter(b, a);
  return x;
}

double standard_truncated(double a, double b, RandomStream& rng) {
  if (a == kNegInf && b == kInf) return rng.normal();
  // Keep the interval on the lower side where Phi has full relative precision.
  if (a > 0.0) return -standard_truncated(-b, -a, rng);

  if (b <= 0.0) {
    const double pa = norm_cdf(a);
    const double pb = norm_cdf(b);
    const double mass = pb - pa;
    if (pb < kTinyMass || mass < kTinyMass || mass <= 1e-10 * pb) {
      return -tail_rejection(-b, -a, rng);
    }
    return clamp_open(norm_quantile(pa + rng.uniform() * mass), a, b);
  }

  // a <= 0 < b: sample the side holding the drawn probability from its own tail.
  const double lower_mass = norm_cdf(a);
  const double upper_mass = norm_sf(b);
  const double mass = 1.0 - lower_mass - upper_mass;
  const double u = rng.uniform();
  const double p_left = lower_mass + u * mass;
  double x;
  if (p_left < 0.5) {
    x = norm_quantile(p_left);
  } else {
    x = -norm_quantile(upper_mass + (1.0 - u) * mass);
  }
  return clamp_open(x, a, b);
}

}  // namespace

double sample_truncated_normal(double mean, double sd, double lower, double upper,
                               RandomStream& rng) {
  if (!(lower < upper)) throw std::invalid_argument("truncated normal: lower must be < upper");
  if (!(sd > 0.0) || !std::isfinite(mean)) {
    throw std::invalid_argument("truncated normal: need finite mean and sd > 0");
  }
  const double a = (lower - mean) / sd;
  const double b = (upper - mean) / sd;
  const double x = mean + sd * standard_truncated(a, b, rng);
  return clamp_open(x, lower, upper);
}

}  // namespace absorb
