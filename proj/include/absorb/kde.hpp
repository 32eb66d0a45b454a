#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace absorb {

/// Samples and bandwidths behind a kernel density estimate.
struct KdeSource {
  int dims = 1;
  std::vector<double> xs;
  std::vector<double> ys;
  double hx = 0.0;
  double hy = 0.0;
};

/// Density values on a regular grid. In 2D, values are row-major with x as
/// the slow index: values[i * y.size() + j] is the density at (x[i], y[j]).
struct DensityGrid {
  int dims = 1;
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> values;
  /// Set when the grid came from kde(); lets the density be re-evaluated anywhere.
  std::shared_ptr<const KdeSource> source;

  /// Trapezoid-rule integral over the grid.
  double integral() const;
  /// Grid-weighted mean of the x coordinate.
  double mean_x() const;
};

/// Gaussian KDE with Silverman's bandwidth, 0.9 min(sd, IQR/1.34) N^(-1/5),
/// on grid_size points spanning [min - 3h, max + 3h].
/// Throws std::invalid_argument for fewer than 100 samples or zero variance.
DensityGrid kde(std::span<const double> samples, int grid_size = 512);

/// Product-kernel 2D KDE, h_j = sigma_j N^(-1/6) with sigma_j = min(sd, IQR/1.349).
DensityGrid kde(std::span<const double> xs, std::span<const double> ys, int grid_size = 128);

/// Density of `grid` at new nodes: exact from the KDE source when present,
/// otherwise (bi)linear interpolation, zero outside the original grid.
DensityGrid evaluate_on(const DensityGrid& grid, std::vector<double> x, std::vector<double> y = {});

/// Hellinger distance [1 - BC]^(1/2), with BC the Bhattacharyya coefficient of
/// the two densities re-evaluated on a shared grid covering both supports and
/// each normalized to unit mass there. Symmetric exactly; clamped to [0, 1].
double hellinger(const DensityGrid& f, const DensityGrid& g);

/// CSV with header `x,density` or `x,y,density`.
std::string density_csv(const DensityGrid& grid);

}  // namespace absorb
