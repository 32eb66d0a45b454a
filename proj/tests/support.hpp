#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "absorb/data_model.hpp"
#include "absorb/likelihood.hpp"

namespace test_support {

/// Mixed-pattern dataset with at least one both-reported study.
absorb::BivariateDataset random_dataset(int n_studies, std::uint64_t seed);

/// A dataset holding one both-reported study.
absorb::BivariateDataset single_both_study(double y1, double s1, double y2, double s2);

/// Joint density of (y1, y2, z1, z2) for a both-reported study, from the 4x4
/// Gaussian with the selection region's mass found by 2D quadrature.
double brute_force_both_density(const absorb::AbsorbParams& p, double y1, double s1, double y2,
                                double s2, double theta1, double theta2, double z1, double z2);

/// One-sample Kolmogorov-Smirnov statistic.
double ks_statistic(std::vector<double> samples, const std::function<double(double)>& cdf);

/// Marginal CDF of rho1 (or rho2) under U(-1,1)^3 restricted to the feasible set.
double feasible_rho_cdf(double x);
/// Marginal CDF of rhoW under the same restriction (quadrature).
double feasible_rhow_cdf(double x);

/// Closed-form Hellinger distance between N(m1, 1) and N(m2, 1).
double gaussian_hellinger(double m1, double m2);

/// AR(1) series x_t = phi x_{t-1} + e_t started from stationarity.
std::vector<double> ar1_series(double phi, std::size_t n, std::uint64_t seed);

std::vector<double> normal_draws(std::size_t n, double mean, double sd, std::uint64_t seed);

}  // namespace test_support
