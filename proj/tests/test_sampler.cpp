#include <gtest/gtest.h>

#include <cmath>

#include "absorb/kde.hpp"
#include "absorb/sampler.hpp"
#include "absorb/simulation.hpp"
#include "support.hpp"

using namespace absorb;

namespace {

SamplerConfig small_config(std::uint64_t seed, long iters = 2000, long burn = 500) {
  SamplerConfig c;
  c.n_chains = 2;
  c.n_iter = iters;
  c.burn_in = burn;
  c.seed = seed;
  c.max_iter_doublings = 0;
  return c;
}

double mean_of(const std::vector<double>& x) {
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

double var_of(const std::vector<double>& x) {
  const double m = mean_of(x);
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return s / static_cast<double>(x.size() - 1);
}

}  // namespace

TEST(Sampler, ConfigValidation) {
  SamplerConfig c;
  EXPECT_NO_THROW(c.check());
  c.burn_in = c.n_iter;
  EXPECT_THROW(c.check(), std::invalid_argument);
  c = SamplerConfig{};
  c.n_iter = 10050;  // 50 retained
  EXPECT_THROW(c.check(), std::invalid_argument);
  c = SamplerConfig{};
  c.thin = 0;
  EXPECT_THROW(c.check(), std::invalid_argument);
  c = SamplerConfig{};
  c.n_iter = 1100;
  c.burn_in = 100;
  c.thin = 7;
  EXPECT_EQ(c.retained_per_chain(), 143);
}

TEST(Sampler, SameSeedSameDraws) {
  const auto d = test_support::random_dataset(25, 1);
  const auto a = run_mcmc(Model::Absorb, d, PriorSpec{}, small_config(77));
  const auto b = run_mcmc(Model::Absorb, d, PriorSpec{}, small_config(77));
  for (int p = 0; p < kNumParams; ++p) {
    for (std::size_t c = 0; c < a.draws.chains.size(); ++c) {
      EXPECT_EQ(a.draws.chains[c].draws[p], b.draws.chains[c].draws[p]);
    }
  }
  const auto other = run_mcmc(Model::Absorb, d, PriorSpec{}, small_config(78));
  EXPECT_NE(other.draws.chains[0].column(Param::mu1), a.draws.chains[0].column(Param::mu1));
  EXPECT_NE(a.draws.chains[0].column(Param::mu1), a.draws.chains[1].column(Param::mu1));
}

TEST(Sampler, OutputIndependentOfThreadCount) {
  const auto d = test_support::random_dataset(20, 2);
  auto serial = small_config(5);
  serial.n_chains = 3;
  serial.max_threads = 1;
  auto parallel = serial;
  parallel.max_threads = 3;
  const auto a = run_mcmc(Model::Nbc, d, PriorSpec{}, serial);
  const auto b = run_mcmc(Model::Nbc, d, PriorSpec{}, parallel);
  for (std::size_t c = 0; c < 3; ++c) {
    EXPECT_EQ(a.draws.chains[c].column(Param::mu2), b.draws.chains[c].column(Param::mu2));
  }
}

TEST(Sampler, InvariantsHoldEveryIteration) {
  const auto truth = builtin_design(3, 30);
  const auto sim = generate_dataset(truth, 9);
  for (Model m : {Model::Absorb, Model::Nbc, Model::AbsorbIsm}) {
    auto cfg = small_config(3, 1500, 300);
    cfg.debug_checks = true;
    const auto fit = run_mcmc(m, sim.observed, PriorSpec{}, cfg);
    const auto prior = PriorSpec{}.resolved_for(sim.observed);
    for (const auto& chain : fit.draws.chains) {
      for (std::size_t t = 0; t < chain.size(); ++t) {
        AbsorbParams p;
        for (Param q : model_params(m)) set_param(p, q, chain.column(q)[t]);
        if (m == Model::Nbc) {
          EXPECT_LT(std::abs(p.rhoW), 1.0);
          EXPECT_GT(p.tau1, 0.0);
        } else {
          ASSERT_TRUE(std::isfinite(log_prior(p, prior))) << to_string(m) << " draw " << t;
          ASSERT_TRUE(p.jointly_feasible());
        }
      }
    }
  }
}

TEST(Sampler, DrawCountsAndAcceptanceRates) {
  const auto d = test_support::random_dataset(30, 4);
  auto cfg = small_config(6, 3000, 1000);
  cfg.thin = 4;
  const auto fit = run_mcmc(Model::Absorb, d, PriorSpec{}, cfg);
  ASSERT_EQ(fit.draws.chains.size(), 2u);
  EXPECT_EQ(fit.draws.total_draws(), 2u * 500u);
  for (const auto& chain : fit.draws.chains) {
    for (const auto& [name, rate] : chain.accept_rates) {
      EXPECT_GT(rate, 0.15) << name;
      EXPECT_LT(rate, 0.8) << name;
    }
  }
}

TEST(Sampler, NbcDropsSelectionColumns) {
  const auto d = test_support::random_dataset(20, 5);
  const auto fit = run_mcmc(Model::Nbc, d, PriorSpec{}, small_config(1));
  EXPECT_TRUE(fit.draws.chains[0].column(Param::gamma01).empty());
  EXPECT_FALSE(fit.draws.chains[0].column(Param::rhoW).empty());
  EXPECT_EQ(fit.diagnostics.ess.count("rho1"), 0u);
  auto cfg = small_config(1);
  cfg.fixed[Param::gamma01] = 0.0;
  EXPECT_THROW(run_mcmc(Model::Nbc, d, PriorSpec{}, cfg), std::invalid_argument);
}

TEST(Sampler, DoublesIterationsWhenEssIsLow) {
  const auto d = test_support::random_dataset(20, 6);
  auto cfg = small_config(2, 600, 100);
  cfg.ess_floor = 1e9;
  cfg.max_iter_doublings = 2;
  const auto fit = run_mcmc(Model::Nbc, d, PriorSpec{}, cfg);
  EXPECT_EQ(fit.diagnostics.doublings, 2);
  EXPECT_EQ(fit.diagnostics.iterations_used, 2400);
  EXPECT_FALSE(fit.diagnostics.converged);
  EXPECT_EQ(fit.draws.total_draws(), 2u * 2300u);
}

// One both-reported study with everything but theta held fixed: theta's
// posterior is the closed-form Gaussian.
TEST(Sampler, ConjugateThetaUpdate) {
  const double y1 = 1.0, s1 = 0.3, y2 = 2.0, s2 = 0.5;
  const auto d = test_support::single_both_study(y1, s1, y2, s2);
  SamplerConfig cfg;
  cfg.n_chains = 1;
  cfg.n_iter = 51000;
  cfg.burn_in = 1000;
  cfg.max_iter_doublings = 0;
  cfg.record_latents = true;
  cfg.seed = 12;
  const double mu1 = 0.5, mu2 = 1.5, tau1 = 0.4, tau2 = 0.6, rhoB = 0.3, rhoW = 0.4;
  cfg.fixed = {{Param::mu1, mu1}, {Param::mu2, mu2}, {Param::tau1, tau1}, {Param::tau2, tau2},
               {Param::rhoB, rhoB}, {Param::rhoW, rhoW}, {Param::rho1, 0.0}, {Param::rho2, 0.0},
               {Param::gamma01, 0.0}, {Param::gamma11, 0.1}, {Param::gamma02, 0.0}, {Param::gamma12, 0.1}};
  const auto fit = run_mcmc(Model::Absorb, d, PriorSpec{}, cfg);
  const auto& t1 = fit.draws.chains[0].latent_trace[0];
  const auto& t2 = fit.draws.chains[0].latent_trace[1];

  // P = T^-1 + S^-1, mean = P^-1 (T^-1 mu + S^-1 y), by explicit 2x2 algebra.
  const double ta = tau1 * tau1, tb = rhoB * tau1 * tau2, tc = tau2 * tau2;
  const double sa = s1 * s1, sb = rhoW * s1 * s2, sc = s2 * s2;
  const double tdet = ta * tc - tb * tb, sdet = sa * sc - sb * sb;
  const double pa = tc / tdet + sc / sdet, pb = -tb / tdet - sb / sdet, pc = ta / tdet + sa / sdet;
  const double pdet = pa * pc - pb * pb;
  const double va = pc / pdet, vb = -pb / pdet, vc = pa / pdet;
  const double l1 = (tc * mu1 - tb * mu2) / tdet + (sc * y1 - sb * y2) / sdet;
  const double l2 = (-tb * mu1 + ta * mu2) / tdet + (-sb * y1 + sa * y2) / sdet;
  const double m1 = va * l1 + vb * l2, m2 = vb * l1 + vc * l2;

  EXPECT_NEAR(mean_of(t1) / m1, 1.0, 0.02);
  EXPECT_NEAR(mean_of(t2) / m2, 1.0, 0.02);
  EXPECT_NEAR(var_of(t1) / va, 1.0, 0.02);
  EXPECT_NEAR(var_of(t2) / vc, 1.0, 0.02);
}

// mu's marginal posterior for one study: y ~ N(mu, T + S), mu ~ N(0, 100^2 I).
TEST(Sampler, ConjugateMuUpdate) {
  const double y1 = 1.0, s1 = 0.3, y2 = 2.0, s2 = 0.5;
  const auto d = test_support::single_both_study(y1, s1, y2, s2);
  SamplerConfig cfg;
  cfg.n_chains = 2;
  cfg.n_iter = 101000;
  cfg.burn_in = 1000;
  cfg.max_iter_doublings = 0;
  cfg.seed = 13;
  const double tau1 = 0.4, tau2 = 0.6, rhoB = 0.3, rhoW = 0.4;
  cfg.fixed = {{Param::tau1, tau1}, {Param::tau2, tau2}, {Param::rhoB, rhoB}, {Param::rhoW, rhoW},
               {Param::rho1, 0.0}, {Param::rho2, 0.0}, {Param::gamma01, 0.0}, {Param::gamma11, 0.1},
               {Param::gamma02, 0.0}, {Param::gamma12, 0.1}};
  const auto fit = run_mcmc(Model::Absorb, d, PriorSpec{}, cfg);
  const double ca = tau1 * tau1 + s1 * s1, cb = rhoB * tau1 * tau2 + rhoW * s1 * s2,
               cc = tau2 * tau2 + s2 * s2;
  const double cdet = ca * cc - cb * cb;
  const double prior_prec = 1e-4;
  const double pa = cc / cdet + prior_prec, pb = -cb / cdet, pc = ca / cdet + prior_prec;
  const double pdet = pa * pc - pb * pb;
  const double va = pc / pdet, vb = -pb / pdet, vc = pa / pdet;
  const double l1 = (cc * y1 - cb * y2) / cdet, l2 = (-cb * y1 + ca * y2) / cdet;
  const double m1 = va * l1 + vb * l2, m2 = vb * l1 + vc * l2;
  const auto mu1 = fit.draws.combined(Param::mu1);
  const auto mu2 = fit.draws.combined(Param::mu2);
  EXPECT_NEAR(mean_of(mu1) / m1, 1.0, 0.02);
  EXPECT_NEAR(mean_of(mu2) / m2, 1.0, 0.02);
  EXPECT_NEAR(var_of(mu1) / va, 1.0, 0.03);
  EXPECT_NEAR(var_of(mu2) / vc, 1.0, 0.03);
}

TEST(Sampler, NbcCalibrationAcrossReplicates) {
  SimTruth truth;
  truth.n_studies = 50;
  truth.params.mu1 = 0.3;
  truth.params.mu2 = -0.3;
  truth.params.tau1 = truth.params.tau2 = 0.5;
  truth.params.rhoW = truth.params.rhoB = 0.5;
  truth.params.gamma01 = truth.params.gamma02 = 20.0;  // every endpoint reported
  int within = 0;
  for (int r = 0; r < 100; ++r) {
    const auto sim = generate_dataset(truth, 1000 + r);
    ASSERT_EQ(sim.observed.m1, 50u);
    const auto fit = run_mcmc(Model::Nbc, sim.observed, PriorSpec{}, small_config(r, 1500, 300));
    const auto mu1 = fit.draws.combined(Param::mu1);
    within += std::abs(mean_of(mu1) - 0.3) <= 3.0 * std::sqrt(var_of(mu1));
  }
  EXPECT_GE(within, 95);
}

TEST(Sampler, FrozenRhosReduceToNbc) {
  SimTruth truth = builtin_design(1, 50);
  truth.params.rho1 = truth.params.rho2 = 0.0;
  const auto sim = generate_dataset(truth, 21);
  auto cfg = small_config(4, 12000, 2000);
  cfg.n_chains = 3;
  auto frozen = cfg;
  frozen.fixed = {{Param::rho1, 0.0}, {Param::rho2, 0.0}};
  const auto abs = run_mcmc(Model::Absorb, sim.observed, PriorSpec{}, frozen);
  const auto nbc = run_mcmc(Model::Nbc, sim.observed, PriorSpec{}, cfg);
  const auto a = abs.draws.combined(Param::mu1);
  const auto b = nbc.draws.combined(Param::mu1);
  EXPECT_LT(hellinger(kde(a), kde(b)), 0.05);
}

TEST(Sampler, PriorOnlyRunsRecoverPriorMarginals) {
  const auto d = test_support::random_dataset(10, 7);
  SamplerConfig cfg;
  cfg.n_chains = 2;
  cfg.n_iter = 41000;
  cfg.burn_in = 1000;
  cfg.thin = 2;
  cfg.max_iter_doublings = 0;
  cfg.prior_only = true;
  cfg.seed = 8;
  const auto fit = run_mcmc(Model::Absorb, d, PriorSpec{}, cfg);
  const auto g0 = fit.draws.combined(Param::gamma01);
  EXPECT_LT(test_support::ks_statistic(g0, [](double x) { return std::clamp((x + 2.0) / 4.0, 0.0, 1.0); }), 0.03);
  const auto r1 = fit.draws.combined(Param::rho1);
  EXPECT_LT(test_support::ks_statistic(r1, test_support::feasible_rho_cdf), 0.03);
  const auto mu = fit.draws.combined(Param::mu1);
  EXPECT_NEAR(std::sqrt(var_of(mu)), 100.0, 3.0);
}
