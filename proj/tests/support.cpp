#include "support.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <numbers>

#include "absorb/random.hpp"

namespace test_support {

using boost::math::quadrature::gauss_kronrod;

absorb::BivariateDataset random_dataset(int n_studies, std::uint64_t seed) {
  absorb::RandomStream rng(seed, 99);
  std::vector<absorb::StudyRecord> studies;
  for (int i = 0; i < n_studies; ++i) {
    absorb::StudyRecord s;
    s.study_id = "R" + std::to_string(i);
    s.sample_size = rng.uniform_int(20, 100);
    const int pattern = i < 2 ? 0 : rng.uniform_int(0, 2);
    if (pattern != 2) {
      s.y1 = rng.normal(0.3, 0.6);
      s.s1 = rng.uniform(0.2, 0.8);
    }
    if (pattern != 1) {
      s.y2 = rng.normal(-0.3, 0.6);
      s.s2 = rng.uniform(0.2, 0.8);
    }
    studies.push_back(s);
  }
  return absorb::partition(studies);
}

absorb::BivariateDataset single_both_study(double y1, double s1, double y2, double s2) {
  return absorb::partition({absorb::StudyRecord{"only", 50, y1, s1, y2, s2}});
}

double brute_force_both_density(const absorb::AbsorbParams& p, double y1, double s1, double y2,
                                double s2, double theta1, double theta2, double z1, double z2) {
  if (!(z1 > 0.0 && z2 > 0.0)) return 0.0;
  const double m1 = p.gamma01 + p.gamma11 / s1;
  const double m2 = p.gamma02 + p.gamma12 / s2;
  Eigen::Matrix4d cov;
  cov << s1 * s1, p.rhoW * s1 * s2, p.rho1 * s1, 0.0,
         p.rhoW * s1 * s2, s2 * s2, 0.0, p.rho2 * s2,
         p.rho1 * s1, 0.0, 1.0, 0.0,
         0.0, p.rho2 * s2, 0.0, 1.0;
  const Eigen::Vector4d r(y1 - theta1, y2 - theta2, z1 - m1, z2 - m2);
  const double quad = r.dot(cov.inverse() * r);
  const double dens = std::exp(-0.5 * quad) / (4.0 * std::numbers::pi * std::numbers::pi * std::sqrt(cov.determinant()));

  // Mass of {z1 > 0, z2 > 0} under the z-marginal N(m, I), by nested quadrature.
  auto phi = [](double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); };
  const double inf = std::numeric_limits<double>::infinity();
  const double mass = gauss_kronrod<double, 61>::integrate(
      [&](double a) {
        const double inner = gauss_kronrod<double, 61>::integrate(
            [&](double b) { return phi(b - m2); }, 0.0, inf, 15, 1e-14);
        return phi(a - m1) * inner;
      },
      0.0, inf, 15, 1e-14);
  return dens / mass;
}

double ks_statistic(std::vector<double> samples, const std::function<double(double)>& cdf) {
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = cdf(samples[i]);
    d = std::max({d, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f});
  }
  return d;
}

double feasible_rho_cdf(double x) {
  // Density proportional to the area of the feasible (rho_other, rhoW) slice,
  // 4 sqrt(1 - x^2) up to normalization: a semicircle law.
  if (x <= -1.0) return 0.0;
  if (x >= 1.0) return 1.0;
  return 0.5 + (x * std::sqrt(1.0 - x * x) + std::asin(x)) / std::numbers::pi;
}

double feasible_rhow_cdf(double x) {
  // Density of rhoW: measure of {(a, b): (1 - a^2)(1 - b^2) > w^2}.
  auto density = [](double w) {
    return gauss_kronrod<double, 61>::integrate(
        [w](double a) {
          const double q = 1.0 - w * w / (1.0 - a * a);
          return q > 0.0 ? 2.0 * std::sqrt(q) : 0.0;
        },
        -1.0, 1.0, 12, 1e-12);
  };
  if (x <= -1.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double total = gauss_kronrod<double, 61>::integrate(density, -1.0, 1.0, 12, 1e-10);
  return gauss_kronrod<double, 61>::integrate(density, -1.0, x, 12, 1e-10) / total;
}

double gaussian_hellinger(double m1, double m2) {
  const double d = m1 - m2;
  return std::sqrt(1.0 - std::exp(-d * d / 8.0));
}

std::vector<double> ar1_series(double phi, std::size_t n, std::uint64_t seed) {
  absorb::RandomStream rng(seed, 7);
  std::vector<double> x(n);
  x[0] = rng.normal() / std::sqrt(1.0 - phi * phi);
  for (std::size_t t = 1; t < n; ++t) x[t] = phi * x[t - 1] + rng.normal();
  return x;
}

std::vector<double> normal_draws(std::size_t n, double mean, double sd, std::uint64_t seed) {
  absorb::RandomStream rng(seed, 3);
  std::vector<double> x(n);
  for (auto& v : x) v = rng.normal(mean, sd);
  return x;
}

}  // namespace test_support
