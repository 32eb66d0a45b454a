#pragma once

#include <span>
#include <vector>

namespace absorb {

struct EssResult {
  double ess = 0.0;
  bool degenerate = false;  // zero-variance series; ess set to N
};

/// Single-series ESS, N / (1 + 2 sum rho_t) with Geyer's initial monotone
/// sequence truncation. Clamped to (0, N]. Needs at least 10 values.
EssResult effective_sample_size(std::span<const double> series);

/// Multi-chain ESS: per-chain values summed.
EssResult effective_sample_size(const std::vector<std::vector<double>>& chains);

/// Split-chain potential scale reduction. Needs >= 2 chains of equal length >= 10.
double split_rhat(const std::vector<std::vector<double>>& chains);

}  // namespace absorb
