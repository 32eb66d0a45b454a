#include "absorb/kde.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "absorb/normal.hpp"
#include <stdexcept>

namespace absorb {

namespace {

constexpr double kCutoff = 8.0;  // kernel support in bandwidths; exp(-32) is below round-off
constexpr std::size_t kMaxUnion1d = 8192;
constexpr std::size_t kMaxUnion2d = 256;

double sample_sd(std::span<const double> x) {
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(x.size());
  double ss = 0.0;
  for (double v : x) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / static_cast<double>(x.size() - 1));
}

double iqr(std::span<const double> x) {
  std::vector<double> s(x.begin(), x.end());
  std::sort(s.begin(), s.end());
  auto q = [&](double p) {
    const double h = p * static_cast<double>(s.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, s.size() - 1);
    return s[lo] + (h - static_cast<double>(lo)) * (s[hi] - s[lo]);
  };
  return q(0.75) - q(0.25);
}

double spread(std::span<const double> x, double iqr_divisor) {
  const double sd = sample_sd(x);
  const double r = iqr(x) / iqr_divisor;
  return r > 0.0 ? std::min(sd, r) : sd;
}

void check_samples(std::span<const double> x) {
  if (x.size() < 100) throw std::invalid_argument("kde needs at least 100 samples");
  for (double v : x) {
    if (!std::isfinite(v)) throw std::invalid_argument("kde samples must be finite");
  }
  const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
  if (!(*hi > *lo)) throw std::invalid_argument("kde samples have zero variance");
}

std::vector<double> linspace(double lo, double hi, std::size_t n) {
  std::vector<double> out(n);
  const double step = (hi - lo) / static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) out[i] = lo + step * static_cast<double>(i);
  out.back() = hi;
  return out;
}

// Kernel weights phi((node - s)/h)/h over the nodes within kCutoff*h of s.
// Nodes must be sorted; returns the first node index and fills weights.
std::size_t kernel_window(const std::vector<double>& nodes, double s, double h,
                          std::vector<double>& weights) {
  const auto first = std::lower_bound(nodes.begin(), nodes.end(), s - kCutoff * h);
  const auto last = std::upper_bound(first, nodes.end(), s + kCutoff * h);
  weights.clear();
  for (auto it = first; it != last; ++it) {
    const double u = (*it - s) / h;
    weights.push_back(std::exp(-0.5 * u * u) * std::numbers::inv_sqrtpi * kInvSqrt2 / h);
  }
  return static_cast<std::size_t>(first - nodes.begin());
}

std::vector<double> evaluate_source(const KdeSource& src, const std::vector<double>& x,
                                    const std::vector<double>& y) {
  const double inv_n = 1.0 / static_cast<double>(src.xs.size());
  std::vector<double> wx, wy;
  if (src.dims == 1) {
    std::vector<double> out(x.size(), 0.0);
    for (double s : src.xs) {
      const auto start = kernel_window(x, s, src.hx, wx);
      for (std::size_t k = 0; k < wx.size(); ++k) out[start + k] += wx[k];
    }
    for (double& v : out) v *= inv_n;
    return out;
  }
  const std::size_t ny = y.size();
  std::vector<double> out(x.size() * ny, 0.0);
  for (std::size_t n = 0; n < src.xs.size(); ++n) {
    const auto sx = kernel_window(x, src.xs[n], src.hx, wx);
    if (wx.empty()) continue;
    const auto sy = kernel_window(y, src.ys[n], src.hy, wy);
    for (std::size_t a = 0; a < wx.size(); ++a) {
      double* row = out.data() + (sx + a) * ny + sy;
      for (std::size_t b = 0; b < wy.size(); ++b) row[b] += wx[a] * wy[b];
    }
  }
  for (double& v : out) v *= inv_n;
  return out;
}

double interp_weight(const std::vector<double>& nodes, double t, std::size_t& idx) {
  const auto it = std::upper_bound(nodes.begin(), nodes.end(), t);
  idx = static_cast<std::size_t>(it - nodes.begin()) - 1;
  if (idx + 1 >= nodes.size()) idx = nodes.size() - 2;
  return (t - nodes[idx]) / (nodes[idx + 1] - nodes[idx]);
}

bool inside(const std::vector<double>& nodes, double t) { return t >= nodes.front() && t <= nodes.back(); }

std::vector<double> interpolate(const DensityGrid& g, const std::vector<double>& x,
                                const std::vector<double>& y) {
  if (g.dims == 1) {
    std::vector<double> out(x.size(), 0.0);
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (!inside(g.x, x[i])) continue;
      std::size_t k;
      const double t = interp_weight(g.x, x[i], k);
      out[i] = (1.0 - t) * g.values[k] + t * g.values[k + 1];
    }
    return out;
  }
  const std::size_t gy = g.y.size();
  std::vector<double> out(x.size() * y.size(), 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!inside(g.x, x[i])) continue;
    std::size_t a;
    const double tx = interp_weight(g.x, x[i], a);
    for (std::size_t j = 0; j < y.size(); ++j) {
      if (!inside(g.y, y[j])) continue;
      std::size_t b;
      const double ty = interp_weight(g.y, y[j], b);
      const double v00 = g.values[a * gy + b], v01 = g.values[a * gy + b + 1];
      const double v10 = g.values[(a + 1) * gy + b], v11 = g.values[(a + 1) * gy + b + 1];
      out[i * y.size() + j] = (1.0 - tx) * ((1.0 - ty) * v00 + ty * v01) + tx * ((1.0 - ty) * v10 + ty * v11);
    }
  }
  return out;
}

std::vector<double> trapezoid_weights(const std::vector<double>& nodes) {
  std::vector<double> w(nodes.size(), 0.0);
  for (std::size_t i = 0; i + 1 < nodes.size(); ++i) {
    const double half = 0.5 * (nodes[i + 1] - nodes[i]);
    w[i] += half;
    w[i + 1] += half;
  }
  return w;
}

// Shared nodes covering both axes at the finer of the two spacings.
std::vector<double> union_axis(const std::vector<double>& a, const std::vector<double>& b,
                               std::size_t cap) {
  const double lo = std::min(a.front(), b.front());
  const double hi = std::max(a.back(), b.back());
  const double step = std::min((a.back() - a.front()) / static_cast<double>(a.size() - 1),
                               (b.back() - b.front()) / static_cast<double>(b.size() - 1));
  const double needed = std::min(std::ceil((hi - lo) / step) + 1.0, static_cast<double>(cap));
  const std::size_t n = std::max({a.size(), b.size(), static_cast<std::size_t>(needed)});
  return linspace(lo, hi, n);
}

}  // namespace

double DensityGrid::integral() const {
  const auto wx = trapezoid_weights(x);
  double total = 0.0;
  if (dims == 1) {
    for (std::size_t i = 0; i < x.size(); ++i) total += wx[i] * values[i];
    return total;
  }
  const auto wy = trapezoid_weights(y);
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t j = 0; j < y.size(); ++j) total += wx[i] * wy[j] * values[i * y.size() + j];
  }
  return total;
}

double DensityGrid::mean_x() const {
  const auto wx = trapezoid_weights(x);
  double mass = 0.0, moment = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double marginal = values[i];
    if (dims == 2) {
      const auto wy = trapezoid_weights(y);
      marginal = 0.0;
      for (std::size_t j = 0; j < y.size(); ++j) marginal += wy[j] * values[i * y.size() + j];
    }
    mass += wx[i] * marginal;
    moment += wx[i] * marginal * x[i];
  }
  return moment / mass;
}

DensityGrid kde(std::span<const double> samples, int grid_size) {
  check_samples(samples);
  if (grid_size < 2) throw std::invalid_argument("grid_size must be at least 2");
  auto src = std::make_shared<KdeSource>();
  src->dims = 1;
  src->xs.assign(samples.begin(), samples.end());
  src->hx = 0.9 * spread(samples, 1.34) * std::pow(static_cast<double>(samples.size()), -0.2);
  const auto [lo, hi] = std::minmax_element(samples.begin(), samples.end());
  DensityGrid g;
  g.dims = 1;
  g.x = linspace(*lo - 3.0 * src->hx, *hi + 3.0 * src->hx, static_cast<std::size_t>(grid_size));
  g.values = evaluate_source(*src, g.x, g.y);
  g.source = std::move(src);
  return g;
}

DensityGrid kde(std::span<const double> xs, std::span<const double> ys, int grid_size) {
  if (xs.size() != ys.size()) throw std::invalid_argument("kde needs paired samples");
  check_samples(xs);
  check_samples(ys);
  if (grid_size < 2) throw std::invalid_argument("grid_size must be at least 2");
  const double factor = std::pow(static_cast<double>(xs.size()), -1.0 / 6.0);
  auto src = std::make_shared<KdeSource>();
  src->dims = 2;
  src->xs.assign(xs.begin(), xs.end());
  src->ys.assign(ys.begin(), ys.end());
  src->hx = spread(xs, 1.349) * factor;
  src->hy = spread(ys, 1.349) * factor;
  const auto [xlo, xhi] = std::minmax_element(xs.begin(), xs.end());
  const auto [ylo, yhi] = std::minmax_element(ys.begin(), ys.end());
  DensityGrid g;
  g.dims = 2;
  g.x = linspace(*xlo - 3.0 * src->hx, *xhi + 3.0 * src->hx, static_cast<std::size_t>(grid_size));
  g.y = linspace(*ylo - 3.0 * src->hy, *yhi + 3.0 * src->hy, static_cast<std::size_t>(grid_size));
  g.values = evaluate_source(*src, g.x, g.y);
  g.source = std::move(src);
  return g;
}

DensityGrid evaluate_on(const DensityGrid& grid, std::vector<double> x, std::vector<double> y) {
  if (x.size() < 2 || (grid.dims == 2 && y.size() < 2)) {
    throw std::invalid_argument("evaluation grid needs at least two nodes per axis");
  }
  DensityGrid out;
  out.dims = grid.dims;
  out.x = std::move(x);
  if (grid.dims == 2) out.y = std::move(y);
  out.values = grid.source ? evaluate_source(*grid.source, out.x, out.y) : interpolate(grid, out.x, out.y);
  out.source = grid.source;
  return out;
}

double hellinger(const DensityGrid& f, const DensityGrid& g) {
  if (f.dims != g.dims) throw std::invalid_argument("hellinger: dimension mismatch");
  const std::size_t cap = f.dims == 1 ? kMaxUnion1d : kMaxUnion2d;
  auto ux = union_axis(f.x, g.x, cap);
  std::vector<double> uy;
  if (f.dims == 2) uy = union_axis(f.y, g.y, cap);
  const auto fu = evaluate_on(f, ux, uy);
  const auto gu = evaluate_on(g, ux, uy);

  const auto wx = trapezoid_weights(ux);
  const auto wy = f.dims == 2 ? trapezoid_weights(uy) : std::vector<double>{1.0};
  const std::size_t ny = wy.size();
  double mass_f = 0.0, mass_g = 0.0, overlap = 0.0;
  for (std::size_t i = 0; i < ux.size(); ++i) {
    for (std::size_t j = 0; j < ny; ++j) {
      const double w = wx[i] * wy[j];
      const double a = std::max(fu.values[i * ny + j], 0.0);
      const double b = std::max(gu.values[i * ny + j], 0.0);
      mass_f += w * a;
      mass_g += w * b;
      overlap += w * std::sqrt(a * b);
    }
  }
  if (!(mass_f > 0.0 && mass_g > 0.0)) throw std::invalid_argument("hellinger: density with no mass");
  // sqrt(mass_f * mass_g) is symmetric, and equals mass_f exactly when f == g.
  const double bc = overlap / std::sqrt(mass_f * mass_g);
  return std::clamp(std::sqrt(std::max(0.0, 1.0 - bc)), 0.0, 1.0);
}

std::string density_csv(const DensityGrid& grid) {
  std::string out = grid.dims == 1 ? "x,density\n" : "x,y,density\n";
  char buf[96];
  if (grid.dims == 1) {
    for (std::size_t i = 0; i < grid.x.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", grid.x[i], grid.values[i]);
      out += buf;
    }
    return out;
  }
  for (std::size_t i = 0; i < grid.x.size(); ++i) {
    for (std::size_t j = 0; j < grid.y.size(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", grid.x[i], grid.y[j],
                    grid.values[i * grid.y.size() + j]);
      out += buf;
    }
  }
  return out;
}

}  // namespace absorb
