#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <numbers>

#include "absorb/likelihood.hpp"
#include "absorb/normal.hpp"
#include "absorb/random.hpp"
#include "support.hpp"

using namespace absorb;

namespace {

AbsorbParams random_feasible(RandomStream& rng) {
  AbsorbParams p;
  p.mu1 = rng.normal();
  p.mu2 = rng.normal();
  p.tau1 = rng.uniform(0.1, 2.0);
  p.tau2 = rng.uniform(0.1, 2.0);
  p.gamma01 = rng.uniform(-2.0, 2.0);
  p.gamma02 = rng.uniform(-2.0, 2.0);
  p.gamma11 = rng.uniform(0.0, 0.8);
  p.gamma12 = rng.uniform(0.0, 0.8);
  do {
    p.rho1 = rng.uniform(-0.95, 0.95);
    p.rho2 = rng.uniform(-0.95, 0.95);
    p.rhoW = rng.uniform(-0.95, 0.95);
  } while (!p.jointly_feasible());
  p.rhoB = rng.uniform(-0.9, 0.9);
  return p;
}

LatentState latents_for(const BivariateDataset& d, RandomStream& rng) {
  LatentState s;
  s.theta_both.assign(d.m1, {0.0, 0.0});
  s.theta_y1.assign(d.m2, 0.0);
  s.theta_y2.assign(d.m3, 0.0);
  for (auto& t : s.theta_both) t = {rng.normal(), rng.normal()};
  for (auto& t : s.theta_y1) t = rng.normal();
  for (auto& t : s.theta_y2) t = rng.normal();
  for (const auto& st : d.studies) {
    s.z.push_back({st.reports(1) ? rng.uniform(0.01, 3.0) : -rng.uniform(0.01, 3.0),
                   st.reports(2) ? rng.uniform(0.01, 3.0) : -rng.uniform(0.01, 3.0)});
  }
  return s;
}

}  // namespace

TEST(Likelihood, KhatAndImputedSe) {
  const auto d = partition({StudyRecord{"A", 40, 0.1, 0.5, 0.2, 0.4},
                            StudyRecord{"B", 60, 0.3, 0.25, std::nullopt, std::nullopt},
                            StudyRecord{"C", 80, std::nullopt, std::nullopt, 0.1, 0.2}});
  // endpoint 1: (1/0.25 + 1/0.0625) / (40 + 60) = 20 / 100
  EXPECT_DOUBLE_EQ(estimate_khat(d, 1), 0.2);
  // endpoint 2: (1/0.16 + 1/0.04) / (40 + 80) = 31.25 / 120
  EXPECT_DOUBLE_EQ(estimate_khat(d, 2), 31.25 / 120.0);
  const auto imp = impute_missing_se(d);
  EXPECT_DOUBLE_EQ(imp.imputed_s1.at("C"), std::sqrt(1.0 / (0.2 * 80)));
  EXPECT_DOUBLE_EQ(imp.imputed_s2.at("B"), std::sqrt(1.0 / (31.25 / 120.0 * 60)));
  EXPECT_EQ(imp.imputed_s1.size(), 1u);
  EXPECT_EQ(imp.imputed_s2.size(), 1u);
}

TEST(Likelihood, FactorizedDensityMatchesBruteForce) {
  RandomStream rng(2024);
  for (int trial = 0; trial < 25; ++trial) {
    const auto p = random_feasible(rng);
    const double s1 = rng.uniform(0.2, 0.8), s2 = rng.uniform(0.2, 0.8);
    const double y1 = rng.normal(), y2 = rng.normal();
    const auto d = test_support::single_both_study(y1, s1, y2, s2);
    LatentState lat;
    lat.theta_both = {{rng.normal(), rng.normal()}};
    lat.z = {{rng.uniform(0.05, 3.0), rng.uniform(0.05, 3.0)}};
    const double ours = std::exp(loglik_absorb(p, lat, d, impute_missing_se(d)));
    const double brute = test_support::brute_force_both_density(
        p, y1, s1, y2, s2, lat.theta_both[0][0], lat.theta_both[0][1], lat.z[0][0], lat.z[0][1]);
    EXPECT_NEAR(ours / brute, 1.0, 1e-6) << "trial " << trial;
  }
}

TEST(Likelihood, SingleEndpointStudyMatchesDirectFormula) {
  const auto d = partition({StudyRecord{"A", 40, 0.1, 0.5, 0.2, 0.4},
                            StudyRecord{"B", 60, 0.3, 0.25, std::nullopt, std::nullopt}});
  AbsorbParams p;
  p.gamma01 = -0.3;
  p.gamma11 = 0.2;
  p.gamma02 = 0.4;
  p.gamma12 = 0.5;
  p.rho1 = 0.6;
  const auto imp = impute_missing_se(d);
  LatentState lat;
  lat.theta_both = {{0.0, 0.0}};
  lat.theta_y1 = {0.25};
  lat.z = {{0.5, 0.5}, {0.7, -0.4}};
  const double with_b = loglik_absorb(p, lat, d, imp);
  // Remove study B by comparing against the dataset without it.
  const auto only_a = partition({d.studies[0]});
  LatentState lat_a;
  lat_a.theta_both = lat.theta_both;
  lat_a.z = {lat.z[0]};
  const double without_b = loglik_absorb(p, lat_a, only_a, impute_missing_se(only_a));

  const double s1 = 0.25, s2 = imp.imputed_s2.at("B");
  const double m1 = p.gamma01 + p.gamma11 / s1, m2 = p.gamma02 + p.gamma12 / s2;
  const double w1 = 0.7 - m1;
  const double cond_sd = s1 * std::sqrt(1.0 - p.rho1 * p.rho1);
  const double expected = log_std_norm_pdf(w1) - std::log(norm_cdf(m1)) +
                          log_std_norm_pdf(-0.4 - m2) - std::log(norm_cdf(-m2)) +
                          log_norm_pdf(0.3, 0.25 + p.rho1 * s1 * w1, cond_sd);
  EXPECT_NEAR(with_b - without_b, expected, 1e-12);
}

TEST(Likelihood, InfeasibleCorrelationsGiveMinusInfinity) {
  const auto d = test_support::single_both_study(0.1, 0.3, 0.2, 0.4);
  AbsorbParams p;
  p.rho1 = 0.8;
  p.rho2 = 0.8;
  p.rhoW = 0.5;  // 0.25 > 0.36 * 0.36
  LatentState lat;
  lat.theta_both = {{0.0, 0.0}};
  lat.z = {{1.0, 1.0}};
  EXPECT_EQ(loglik_absorb(p, lat, d, impute_missing_se(d)), kNegInf);
  p.rhoW = 0.3;
  EXPECT_TRUE(std::isfinite(loglik_absorb(p, lat, d, impute_missing_se(d))));
}

TEST(Likelihood, WrongSignLatentGivesMinusInfinity) {
  const auto d = test_support::single_both_study(0.1, 0.3, 0.2, 0.4);
  LatentState lat;
  lat.theta_both = {{0.0, 0.0}};
  lat.z = {{-0.1, 1.0}};
  EXPECT_EQ(loglik_absorb(AbsorbParams{}, lat, d, impute_missing_se(d)), kNegInf);
}

TEST(Likelihood, IsmWithoutMissingStudiesIsAbsorbExactly) {
  RandomStream rng(11);
  const auto d = test_support::random_dataset(20, 3);
  const auto imp = impute_missing_se(d);
  for (int trial = 0; trial < 20; ++trial) {
    const auto p = random_feasible(rng);
    const auto lat = latents_for(d, rng);
    const double a = loglik_absorb(p, lat, d, imp);
    const double b = loglik_ism(p, lat, d, imp);
    EXPECT_EQ(std::memcmp(&a, &b, sizeof a), 0);
  }
}

TEST(Likelihood, IsmAddsQuadrantTerms) {
  auto d = test_support::random_dataset(12, 4);
  d.k_missing = 2;
  const auto imp = impute_missing_se(d);
  RandomStream rng(5);
  const auto p = random_feasible(rng);
  auto lat = latents_for(d, rng);
  lat.s_tilde = {{0.3, 0.4}, {0.5, 0.6}};
  double extra = 0.0;
  for (const auto& st : lat.s_tilde) {
    extra += std::log(norm_cdf(-(p.gamma01 + p.gamma11 / st[0]))) +
             std::log(norm_cdf(-(p.gamma02 + p.gamma12 / st[1])));
  }
  EXPECT_NEAR(loglik_ism(p, lat, d, imp) - loglik_absorb(p, lat, d, imp), extra, 1e-10);
}

TEST(Likelihood, NbcEqualsAbsorbOutcomeTermsWithoutSelection) {
  const auto d = test_support::random_dataset(15, 8);
  RandomStream rng(9);
  auto lat = latents_for(d, rng);
  NbcParams q;
  q.rhoW = 0.3;
  AbsorbParams p;
  p.rhoW = 0.3;
  p.gamma01 = p.gamma02 = 0.0;
  p.gamma11 = p.gamma12 = 0.0;
  // With rho1 = rho2 = 0 and m = 0, selection terms are log(2 phi(z)) per latent.
  double selection = 0.0;
  for (const auto& z : lat.z) selection += 2.0 * std::log(2.0) + log_std_norm_pdf(z[0]) + log_std_norm_pdf(z[1]);
  EXPECT_NEAR(loglik_absorb(p, lat, d, impute_missing_se(d)) - selection, loglik_nbc(q, lat, d), 1e-9);
}

TEST(Likelihood, PriorIncludesAllNormalizingConstants) {
  PriorSpec spec;
  spec.gamma1_upper = {0.8, 0.5};
  AbsorbParams p;
  p.mu1 = 0.2;
  p.mu2 = -0.1;
  p.tau1 = 0.5;
  p.tau2 = 2.0;
  p.gamma11 = 0.3;
  p.gamma12 = 0.3;
  const double expected = log_norm_pdf(0.2, 0, 100) + log_norm_pdf(-0.1, 0, 100) +
                          std::log(2.0 / std::numbers::pi / 1.25) + std::log(2.0 / std::numbers::pi / 5.0) -
                          2.0 * std::log(4.0) - std::log(0.8) - std::log(0.5) - 4.0 * std::log(2.0);
  EXPECT_NEAR(log_prior(p, spec), expected, 1e-12);
  p.gamma12 = 0.6;
  EXPECT_EQ(log_prior(p, spec), kNegInf);
}

TEST(Likelihood, PriorResolvesGamma1BoundFromData) {
  const auto d = partition({StudyRecord{"A", 40, 0.1, 0.5, 0.2, 0.4},
                            StudyRecord{"B", 60, 0.3, 0.7, std::nullopt, std::nullopt}});
  const auto spec = PriorSpec{}.resolved_for(d);
  EXPECT_DOUBLE_EQ(spec.gamma1_upper[0], 0.7);
  EXPECT_DOUBLE_EQ(spec.gamma1_upper[1], 0.4);
  EXPECT_THROW(PriorSpec{}.check(), std::invalid_argument);
}
