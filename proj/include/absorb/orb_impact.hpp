#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "absorb/data_model.hpp"
#include "absorb/kde.hpp"
#include "absorb/sampler.hpp"

namespace absorb {

/// The two fits being compared were made on different datasets.
class FingerprintMismatch : public DataError {
public:
  using DataError::DataError;
};

struct CredibleInterval {
  double lower = 0.0;
  double upper = 0.0;
  double length() const { return upper - lower; }
};

/// Linear-interpolation (type 7) quantile of unsorted data.
double sample_quantile(std::span<const double> samples, double p);

/// Equal-tailed interval; needs at least 100 samples.
CredibleInterval credible_interval(std::span<const double> samples, double level = 0.95);

/// Intersection length over |a| + |b| - intersection.
double jaccard_index(const CredibleInterval& a, const CredibleInterval& b);

/// Every guideline band whose closed interval contains d, mildest first:
/// "probably no impact" [0, 0.2], "moderate" [0.1, 0.4], "substantial" [0.3, 0.6],
/// "severe" [0.5, 1].
std::vector<std::string> interpret_d(double d);

struct DReport {
  double d1 = 0.0;
  double d2 = 0.0;
  double d12 = 0.0;
  std::array<std::vector<std::string>, 3> bands;  // d1, d2, d12
  std::array<CredibleInterval, 2> ci_abs;
  std::array<CredibleInterval, 2> ci_nbc;
  std::array<double, 2> jaccard{};
  std::array<int, 3> percentiles{};  // Table A.1 percentile of d1, d2, d12
};

struct ImpactGrids {
  DensityGrid abs_mu1, abs_mu2, nbc_mu1, nbc_mu2, abs_joint, nbc_joint;
};

struct ImpactAnalysis {
  DReport report;
  ImpactGrids grids;
};

/// Compares the mu posteriors of a bias-corrected and an uncorrected fit.
/// Throws FingerprintMismatch for fits of different datasets and
/// std::invalid_argument when either fit has fewer than 1000 draws.
ImpactAnalysis analyze_impact(const PosteriorDraws& draws_abs, const PosteriorDraws& draws_nbc,
                              int grid_size_1d = 512, int grid_size_2d = 128);

DReport d_measure(const PosteriorDraws& draws_abs, const PosteriorDraws& draws_nbc,
                  int grid_size_1d = 512, int grid_size_2d = 128);

/// Pretty-printed JSON with keys d1, d2, d12, bands, ci_abs, ci_nbc, jaccard, percentiles.
std::string dreport_json(const DReport& report);

}  // namespace absorb
