#include <gtest/gtest.h>

#include <boost/math/distributions/normal.hpp>
#include <cmath>
#include <numbers>

#include "absorb/normal.hpp"
#include "absorb/truncated_normal.hpp"

using namespace absorb;

namespace {

struct Moments {
  double mean = 0.0;
  double var = 0.0;
};

Moments draw_moments(double mean, double sd, double lo, double hi, int n, std::uint64_t seed) {
  RandomStream rng(seed);
  double sum = 0.0, sum_sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = sample_truncated_normal(mean, sd, lo, hi, rng);
    EXPECT_GT(x, lo);
    EXPECT_LT(x, hi);
    sum += x;
    sum_sq += x * x;
  }
  const double m = sum / n;
  return {m, sum_sq / n - m * m};
}

}  // namespace

TEST(Normal, CdfAndQuantileAgreeWithBoost) {
  const boost::math::normal_distribution<double> nd;
  for (double x : {-8.0, -3.0, -1.0, 0.0, 0.5, 2.0, 6.0}) {
    EXPECT_NEAR(norm_cdf(x), boost::math::cdf(nd, x), 1e-15 + 1e-13 * boost::math::cdf(nd, x));
    EXPECT_NEAR(std::exp(log_norm_cdf(x)), boost::math::cdf(nd, x), 1e-13 * boost::math::cdf(nd, x));
  }
  for (double p : {1e-12, 0.01, 0.3, 0.5, 0.9, 1.0 - 1e-9}) {
    EXPECT_NEAR(norm_quantile(p), boost::math::quantile(nd, p), 1e-9);
  }
}

TEST(Normal, LogCdfFarLeftTail) {
  // log Phi(-40) and log Phi(-100) from the Mills-ratio expansion.
  EXPECT_NEAR(log_norm_cdf(-40.0), -804.60844201375379, 1e-8);
  EXPECT_NEAR(log_norm_cdf(-100.0), -5005.5242086942051, 1e-7);
  EXPECT_TRUE(std::isfinite(log_norm_cdf(-1e4)));
  EXPECT_NEAR(log_norm_cdf(10.0) / -7.619853024160526070e-24, 1.0, 1e-13);
}

TEST(TruncatedNormal, UntruncatedIsPlainNormal) {
  const auto m = draw_moments(1.5, 2.0, kNegInf, kInf, 100000, 1);
  EXPECT_NEAR(m.mean, 1.5, 4.0 * 2.0 / std::sqrt(1e5));
}

TEST(TruncatedNormal, PositiveHalfMoments) {
  const auto m = draw_moments(0.0, 1.0, 0.0, kInf, 100000, 2);
  EXPECT_NEAR(m.mean, std::sqrt(2.0 / std::numbers::pi), 0.01);
  EXPECT_NEAR(m.var, 1.0 - 2.0 / std::numbers::pi, 0.01);
}

TEST(TruncatedNormal, NegligibleTruncation) {
  const auto m = draw_moments(5.0, 1.0, 0.0, kInf, 100000, 3);
  EXPECT_NEAR(m.mean, 5.0, 0.01);
}

TEST(TruncatedNormal, FarTailsMatchAnalyticMean) {
  // E[X | X > a] = phi(a) / (1 - Phi(a)); for large a this is about a + 1/a.
  for (double a : {4.0, 12.0, 40.0}) {
    const auto m = draw_moments(0.0, 1.0, a, kInf, 20000, 4);
    const double expected = std::exp(log_std_norm_pdf(a) - log_norm_cdf(-a));
    EXPECT_NEAR(m.mean, expected, 0.02 / a + 1e-3) << a;
  }
  const auto left = draw_moments(0.0, 1.0, kNegInf, -40.0, 20000, 5);
  EXPECT_NEAR(left.mean, -40.0 - 1.0 / 40.0, 2e-3);
}

TEST(TruncatedNormal, NarrowIntervalsStayInside) {
  RandomStream rng(6);
  for (int i = 0; i < 1000; ++i) {
    const double x = sample_truncated_normal(0.0, 1.0, 30.0, 30.0 + 1e-9, rng);
    EXPECT_GT(x, 30.0);
    EXPECT_LT(x, 30.0 + 1e-9);
  }
  const auto m = draw_moments(0.0, 1.0, -1.0, 1.0, 50000, 7);
  EXPECT_NEAR(m.mean, 0.0, 0.01);
  // Var of N(0,1) on (-1, 1): 1 - 2 phi(1) / (2 Phi(1) - 1).
  const double expected_var = 1.0 - 2.0 * std::exp(log_std_norm_pdf(1.0)) / (2.0 * norm_cdf(1.0) - 1.0);
  EXPECT_NEAR(m.var, expected_var, 0.01);
}

TEST(TruncatedNormal, RejectsEmptyInterval) {
  RandomStream rng(1);
  EXPECT_THROW(sample_truncated_normal(0.0, 1.0, 1.0, 1.0, rng), std::invalid_argument);
  EXPECT_THROW(sample_truncated_normal(0.0, 1.0, 2.0, 1.0, rng), std::invalid_argument);
  EXPECT_THROW(sample_truncated_normal(0.0, 0.0, 0.0, 1.0, rng), std::invalid_argument);
}

TEST(TruncatedNormal, DeterministicGivenSeed) {
  RandomStream a(42, 3), b(42, 3);
  for (int i = 0; i < 100; ++i) {
    EXPECT_EQ(sample_truncated_normal(0.2, 1.0, 0.0, kInf, a), sample_truncated_normal(0.2, 1.0, 0.0, kInf, b));
  }
}
