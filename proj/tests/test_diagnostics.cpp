#include <gtest/gtest.h>

#include "absorb/diagnostics.hpp"
#include "support.hpp"

using namespace absorb;

TEST(Ess, IidSeries) {
  const auto x = test_support::normal_draws(10000, 0.0, 1.0, 1);
  const auto r = effective_sample_size(x);
  EXPECT_FALSE(r.degenerate);
  EXPECT_GE(r.ess, 8000.0);
  EXPECT_LE(r.ess, 10000.0);
}

TEST(Ess, Ar1MatchesAnalyticValue) {
  const std::size_t n = 30000;
  const auto x = test_support::ar1_series(0.5, n, 2);
  const double expected = n * (1.0 - 0.5) / (1.0 + 0.5);
  EXPECT_NEAR(effective_sample_size(x).ess, expected, 0.15 * expected);
}

TEST(Ess, StronglyCorrelatedSeriesIsSmall) {
  const std::size_t n = 20000;
  const auto x = test_support::ar1_series(0.95, n, 3);
  const double expected = n * 0.05 / 1.95;
  EXPECT_NEAR(effective_sample_size(x).ess, expected, 0.3 * expected);
}

TEST(Ess, ConstantSeriesIsDegenerate) {
  const std::vector<double> x(500, 3.25);
  const auto r = effective_sample_size(x);
  EXPECT_TRUE(r.degenerate);
  EXPECT_EQ(r.ess, 500.0);
}

TEST(Ess, ClampedToSeriesLength) {
  // Alternating series: negative lag-1 correlation would push ESS above N.
  std::vector<double> x(1000);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = (i % 2 ? 1.0 : -1.0) + 1e-3 * static_cast<double>(i % 7);
  const auto r = effective_sample_size(x);
  EXPECT_GT(r.ess, 0.0);
  EXPECT_LE(r.ess, 1000.0);
}

TEST(Ess, NeedsTenValues) {
  EXPECT_THROW(effective_sample_size(std::vector<double>(9, 1.0)), std::invalid_argument);
}

TEST(SplitRhat, SameDistributionIsNearOne) {
  const auto a = test_support::normal_draws(5000, 0.0, 1.0, 10);
  const auto b = test_support::normal_draws(5000, 0.0, 1.0, 11);
  const double r = split_rhat({a, b});
  EXPECT_GE(r, 0.99);
  EXPECT_LE(r, 1.02);
}

TEST(SplitRhat, SeparatedChainsAreFlagged) {
  const auto a = test_support::normal_draws(2000, 0.0, 1.0, 12);
  const auto b = test_support::normal_draws(2000, 10.0, 1.0, 13);
  EXPECT_GT(split_rhat({a, b}), 2.0);
}

TEST(SplitRhat, DuplicatedChain) {
  const auto a = test_support::normal_draws(3000, 0.0, 1.0, 14);
  const double r = split_rhat({a, a});
  EXPECT_GE(r, 0.99);
  EXPECT_LE(r, 1.01);
}

TEST(SplitRhat, DriftWithinChainIsFlagged) {
  std::vector<double> a(2000), b(2000);
  const auto noise = test_support::normal_draws(4000, 0.0, 1.0, 15);
  for (std::size_t i = 0; i < a.size(); ++i) {
    a[i] = noise[i] + 0.005 * static_cast<double>(i);
    b[i] = noise[2000 + i] + 0.005 * static_cast<double>(i);
  }
  EXPECT_GT(split_rhat({a, b}), 1.1);
}

TEST(SplitRhat, RejectsBadInput) {
  const std::vector<double> a(100, 0.0), b(99, 0.0);
  EXPECT_THROW(split_rhat({a, b}), std::invalid_argument);
  EXPECT_THROW(split_rhat({a}), std::invalid_argument);
}
