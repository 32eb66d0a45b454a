#pragma once

#include <span>

namespace absorb {

enum class DTarget { D1, D2, D12 };

struct QuantileRow {
  int level;  // percent
  double d1, d2, d12;
  double value(DTarget which) const { return which == DTarget::D1 ? d1 : which == DTarget::D2 ? d2 : d12; }
};

/// Empirical quantiles of D over 748 Cochrane meta-analyses (levels 1..100).
std::span<const QuantileRow> overall_d_quantiles();

/// The same restricted to meta-analyses with D > 0.10 (levels 10..90).
std::span<const QuantileRow> d_quantiles_above_tenth();

/// Percentile of d in the overall reference distribution, as an integer in [0, 100].
/// d is rounded to the table's two decimals. A value filling a run of levels
/// [a, b] sits at the centre of [a, b + 1); values between table entries are
/// interpolated linearly between neighbouring run centres, starting from (0, 0).
int reference_percentile(DTarget which, double d);

}  // namespace absorb
