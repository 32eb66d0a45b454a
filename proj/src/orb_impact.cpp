#include "absorb/orb_impact.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <stdexcept>

#include "absorb/reference_tables.hpp"

namespace absorb {

double sample_quantile(std::span<const double> samples, double p) {
  if (samples.empty()) throw std::invalid_argument("quantile of an empty sample");
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("quantile level outside [0, 1]");
  std::vector<double> s(samples.begin(), samples.end());
  const double h = p * static_cast<double>(s.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, s.size() - 1);
  std::nth_element(s.begin(), s.begin() + lo, s.end());
  const double a = s[lo];
  const double b = hi == lo ? a : *std::min_element(s.begin() + lo + 1, s.end());
  return a + (h - static_cast<double>(lo)) * (b - a);
}

CredibleInterval credible_interval(std::span<const double> samples, double level) {
  if (samples.size() < 100) throw std::invalid_argument("credible interval needs at least 100 samples");
  if (!(level > 0.0 && level < 1.0)) throw std::invalid_argument("level must be in (0, 1)");
  return {sample_quantile(samples, 0.5 * (1.0 - level)), sample_quantile(samples, 0.5 * (1.0 + level))};
}

double jaccard_index(const CredibleInterval& a, const CredibleInterval& b) {
  if (!(a.length() > 0.0) || !(b.length() > 0.0)) {
    throw std::invalid_argument("jaccard index needs intervals of positive length");
  }
  const double inter = std::max(0.0, std::min(a.upper, b.upper) - std::max(a.lower, b.lower));
  return inter / (a.length() + b.length() - inter);
}

std::vector<std::string> interpret_d(double d) {
  if (!(d >= 0.0 && d <= 1.0)) throw std::invalid_argument("D must lie in [0, 1]");
  struct Band { const char* label; double lo, hi; };
  static constexpr Band kBands[] = {{"probably no impact", 0.0, 0.2},
                                    {"moderate", 0.1, 0.4},
                                    {"substantial", 0.3, 0.6},
                                    {"severe", 0.5, 1.0}};
  std::vector<std::string> out;
  for (const auto& b : kBands) {
    if (d >= b.lo && d <= b.hi) out.emplace_back(b.label);
  }
  return out;
}

ImpactAnalysis analyze_impact(const PosteriorDraws& abs, const PosteriorDraws& nbc,
                              int grid_size_1d, int grid_size_2d) {
  if (abs.dataset_fingerprint != nbc.dataset_fingerprint) {
    throw FingerprintMismatch("fits were made on different datasets (" + abs.dataset_fingerprint +
                              " vs " + nbc.dataset_fingerprint + ")");
  }
  if (abs.total_draws() < 1000 || nbc.total_draws() < 1000) {
    throw std::invalid_argument("each fit needs at least 1000 draws");
  }
  const auto a1 = abs.combined(Param::mu1), a2 = abs.combined(Param::mu2);
  const auto n1 = nbc.combined(Param::mu1), n2 = nbc.combined(Param::mu2);

  ImpactAnalysis out;
  auto& g = out.grids;
  g.abs_mu1 = kde(a1, grid_size_1d);
  g.abs_mu2 = kde(a2, grid_size_1d);
  g.nbc_mu1 = kde(n1, grid_size_1d);
  g.nbc_mu2 = kde(n2, grid_size_1d);
  g.abs_joint = kde(a1, a2, grid_size_2d);
  g.nbc_joint = kde(n1, n2, grid_size_2d);

  auto& r = out.report;
  r.d1 = hellinger(g.abs_mu1, g.nbc_mu1);
  r.d2 = hellinger(g.abs_mu2, g.nbc_mu2);
  r.d12 = hellinger(g.abs_joint, g.nbc_joint);
  r.bands = {interpret_d(r.d1), interpret_d(r.d2), interpret_d(r.d12)};
  r.ci_abs = {credible_interval(a1), credible_interval(a2)};
  r.ci_nbc = {credible_interval(n1), credible_interval(n2)};
  for (int k = 0; k < 2; ++k) {
    const bool degenerate = !(r.ci_abs[k].length() > 0.0) || !(r.ci_nbc[k].length() > 0.0);
    r.jaccard[k] = degenerate ? 0.0 : jaccard_index(r.ci_abs[k], r.ci_nbc[k]);
  }
  r.percentiles = {reference_percentile(DTarget::D1, r.d1), reference_percentile(DTarget::D2, r.d2),
                   reference_percentile(DTarget::D12, r.d12)};
  return out;
}

DReport d_measure(const PosteriorDraws& abs, const PosteriorDraws& nbc, int grid_size_1d,
                  int grid_size_2d) {
  return analyze_impact(abs, nbc, grid_size_1d, grid_size_2d).report;
}

std::string dreport_json(const DReport& r) {
  using nlohmann::json;
  auto ci = [](const CredibleInterval& c) { return json::array({c.lower, c.upper}); };
  json j;
  j["d1"] = r.d1;
  j["d2"] = r.d2;
  j["d12"] = r.d12;
  j["bands"] = {{"d1", r.bands[0]}, {"d2", r.bands[1]}, {"d12", r.bands[2]}};
  j["ci_abs"] = {{"mu1", ci(r.ci_abs[0])}, {"mu2", ci(r.ci_abs[1])}};
  j["ci_nbc"] = {{"mu1", ci(r.ci_nbc[0])}, {"mu2", ci(r.ci_nbc[1])}};
  j["jaccard"] = {{"mu1", r.jaccard[0]}, {"mu2", r.jaccard[1]}};
  j["percentiles"] = {{"d1", r.percentiles[0]}, {"d2", r.percentiles[1]}, {"d12", r.percentiles[2]}};
  return j.dump(2) + "\n";
}

}  // namespace absorb
