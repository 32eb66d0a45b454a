#pragma once

#include "absorb/random.hpp"

namespace absorb {

/// Draws from N(mean, sd^2) restricted to (lower, upper); either bound may be
/// infinite. Inverse-CDF on the lower tail side, with a rejection sampler for
/// intervals whose probability mass is too small to invert.
///
/// Throws std::invalid_argument unless lower < upper and sd > 0.
double sample_truncated_normal(double mean, double sd, double lower, double upper,
                               RandomStream& rng);

}  // namespace absorb
