#include "absorb/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace absorb {

namespace {

double mean_of(std::span<const double> x) {
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double autocovariance(std::span<const double> x, double mean, std::size_t lag) {
  double sum = 0.0;
  for (std::size_t i = 0; i + lag < x.size(); ++i) sum += (x[i] - mean) * (x[i + lag] - mean);
  return sum / static_cast<double>(x.size());
}

}  // namespace

EssResult effective_sample_size(std::span<const double> series) {
  const std::size_t n = series.size();
  if (n < 10) throw std::invalid_argument("ESS needs at least 10 values");
  const double nd = static_cast<double>(n);
  const double mean = mean_of(series);
  const double gamma0 = autocovariance(series, mean, 0);
  if (!(gamma0 > 1e-300 * (1.0 + mean * mean))) return {nd, true};

  // Sum of consecutive-pair autocorrelations, kept positive and non-increasing.
  double sum_pairs = 0.0;
  double prev_pair = std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t + 1 < n; t += 2) {
    double pair = (autocovariance(series, mean, t) + autocovariance(series, mean, t + 1)) / gamma0;
    if (pair <= 0.0) break;
    pair = std::min(pair, prev_pair);
    sum_pairs += pair;
    prev_pair = pair;
  }
  // tau = -1 + 2 * sum of pairs (the lag-0 term counts once).
  const double tau = std::max(-1.0 + 2.0 * sum_pairs, 1.0 / nd);
  return {std::clamp(nd / tau, std::min(1.0, nd), nd), false};
}

EssResult effective_sample_size(const std::vector<std::vector<double>>& chains) {
  if (chains.empty()) throw std::invalid_argument("ESS needs at least one chain");
  EssResult total;
  std::size_t n = 0;
  for (const auto& c : chains) {
    const auto r = effective_sample_size(std::span<const double>(c));
    total.ess += r.ess;
    total.degenerate = total.degenerate || r.degenerate;
    n += c.size();
  }
  total.ess = std::min(total.ess, static_cast<double>(n));
  return total;
}

double split_rhat(const std::vector<std::vector<double>>& chains) {
  if (chains.size() < 2) throw std::invalid_argument("split R-hat needs at least two chains");
  const std::size_t len = chains.front().size();
  if (len < 10) throw std::invalid_argument("split R-hat needs chains of length >= 10");
  for (const auto& c : chains) {
    if (c.size() != len) throw std::invalid_argument("split R-hat needs chains of equal length");
  }
  const std::size_t half = len / 2;
  std::vector<std::span<const double>> halves;
  for (const auto& c : chains) {
    halves.emplace_back(c.data(), half);
    halves.emplace_back(c.data() + (len - half), half);
  }
  const double m = static_cast<double>(halves.size());
  const double h = static_cast<double>(half);
  std::vector<double> means;
  double within = 0.0;
  for (const auto& part : halves) {
    const double mu = mean_of(part);
    means.push_back(mu);
    double ss = 0.0;
    for (double x : part) ss += (x - mu) * (x - mu);
    within += ss / (h - 1.0);
  }
  within /= m;
  const double grand = std::accumulate(means.begin(), means.end(), 0.0) / m;
  double between = 0.0;
  for (double mu : means) between += (mu - grand) * (mu - grand);
  between *= h / (m - 1.0);
  if (!(within > 0.0)) return between > 0.0 ? std::numeric_limits<double>::infinity() : 1.0;
  const double var_plus = (h - 1.0) / h * within + between / h;
  return std::sqrt(var_plus / within);
}

}  // namespace absorb
