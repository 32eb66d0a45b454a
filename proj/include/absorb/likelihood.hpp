#pragma once

#include <array>
#include <cstddef>
#include <limits>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "absorb/data_model.hpp"

namespace absorb {

enum class Model { Absorb, Nbc, AbsorbIsm };

std::string to_string(Model model);
/// Accepts "absorb", "nbc", "ism"/"absorb-ism" (case-insensitive).
Model parse_model(std::string_view name);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  double length() const { return hi - lo; }
  bool contains_open(double x) const { return x > lo && x < hi; }
};

/// The twelve structural parameters of the selection model.
struct AbsorbParams {
  double mu1 = 0.0, mu2 = 0.0;
  double tau1 = 1.0, tau2 = 1.0;
  double gamma01 = 0.0, gamma02 = 0.0;
  double gamma11 = 0.0, gamma12 = 0.0;
  double rho1 = 0.0, rho2 = 0.0;
  double rhoW = 0.0, rhoB = 0.0;

  double gamma0(int endpoint) const { return endpoint == 1 ? gamma01 : gamma02; }
  double gamma1(int endpoint) const { return endpoint == 1 ? gamma11 : gamma12; }
  double rho(int endpoint) const { return endpoint == 1 ? rho1 : rho2; }

  /// rhoW^2 < (1 - rho1^2)(1 - rho2^2): the conditional outcome covariance
  /// given the selection latents is positive definite.
  bool jointly_feasible() const;
};

/// Parameters of the non-bias-corrected bivariate random-effects model.
struct NbcParams {
  double mu1 = 0.0, mu2 = 0.0;
  double tau1 = 1.0, tau2 = 1.0;
  double rhoW = 0.0, rhoB = 0.0;
};

/// Study-level latent quantities. `z` covers the n modeled studies in dataset
/// order; `s_tilde` and `z_missing` cover the K unreported studies (ISM).
struct LatentState {
  std::vector<std::array<double, 2>> theta_both;
  std::vector<double> theta_y1;
  std::vector<double> theta_y2;
  std::vector<std::array<double, 2>> z;
  std::vector<std::array<double, 2>> s_tilde;
  std::vector<std::array<double, 2>> z_missing;
};

/// Plug-in standard errors for unreported outcomes, s_hat = sqrt(1/(k_hat n)).
struct ImputationReport {
  double k_hat1 = 0.0;
  double k_hat2 = 0.0;
  std::map<std::string, double> imputed_s1;  // second-only studies
  std::map<std::string, double> imputed_s2;  // first-only studies
};

struct PriorSpec {
  double mu_sd = 100.0;
  double tau_scale = 1.0;
  Interval gamma0_range{-2.0, 2.0};
  /// Upper bound of the U(0, b_j) prior on gamma_1j; NaN means "max observed s_j".
  std::array<double, 2> gamma1_upper{std::numeric_limits<double>::quiet_NaN(),
                                     std::numeric_limits<double>::quiet_NaN()};
  Interval rho_range{-1.0, 1.0};

  /// Copy with unset gamma1 bounds filled in from the dataset.
  PriorSpec resolved_for(const BivariateDataset& dataset) const;
  bool resolved() const;
  /// Throws std::invalid_argument on non-positive scales or empty ranges.
  void check() const;
};

/// Effect size and standard error per endpoint, with imputed SEs filled in.
struct ModelStudy {
  ReportPattern pattern = ReportPattern::Both;
  std::array<double, 2> y{0.0, 0.0};
  std::array<double, 2> s{1.0, 1.0};
  std::array<bool, 2> reported{true, true};
};

// --- missing standard errors ------------------------------------------------

/// k_hat_j = sum(1/s_ij^2) / sum(n_i) over the studies reporting endpoint j.
double estimate_khat(const BivariateDataset& dataset, int endpoint);

ImputationReport impute_missing_se(const BivariateDataset& dataset);

std::vector<ModelStudy> model_studies(const BivariateDataset& dataset,
                                      const ImputationReport& imputed);

/// [min_i s_ij, max_i s_ij] over observed SEs; the support of the ISM s_tilde prior.
std::array<Interval, 2> observed_se_range(const BivariateDataset& dataset);

// --- log densities ------------------------------------------------------------

double log_prior(const AbsorbParams& params, const PriorSpec& spec);
double log_prior(const NbcParams& params, const PriorSpec& spec);

/// Hierarchical prior of the study-level means given (mu, tau, rhoB).
double log_latent_prior(double mu1, double mu2, double tau1, double tau2, double rhoB,
                        const LatentState& latents);

/// Uniform prior on each s_tilde within the observed SE range.
double log_missing_se_prior(const LatentState& latents, const std::array<Interval, 2>& bounds);

/// Selection-model log-likelihood: per study, the truncated-normal density of
/// each selection latent plus the Gaussian density of the reported outcomes
/// conditional on those latents.
double loglik_absorb(const AbsorbParams& params, const LatentState& latents,
                     const BivariateDataset& dataset, const ImputationReport& imputed);

double loglik_nbc(const NbcParams& params, const LatentState& latents,
                  const BivariateDataset& dataset);

/// loglik_absorb plus log Phi(-m_k1) + log Phi(-m_k2) for each unreported study.
double loglik_ism(const AbsorbParams& params, const LatentState& latents,
                  const BivariateDataset& dataset, const ImputationReport& imputed);

namespace terms {

inline double selection_mean(double gamma0, double gamma1, double s) { return gamma0 + gamma1 / s; }

/// log of N(z; mean, 1) restricted to z > 0 (reported) or z < 0 (unreported).
double log_selection(double z, double mean, bool reported);

/// Outcomes of a both-reported study given selection residuals w = z - mean.
double log_outcomes_both(const ModelStudy& study, const std::array<double, 2>& theta,
                         const std::array<double, 2>& w, double rho1, double rho2, double rhoW);

/// One reported outcome given its selection residual.
double log_outcome_single(double y, double theta, double s, double rho, double w);

/// log Phi(-m1) + log Phi(-m2): both latents of an unreported study fall below zero.
double log_quadrant(double mean1, double mean2);

double log_theta_pair_prior(const std::array<double, 2>& theta, double mu1, double mu2,
                            double tau1, double tau2, double rhoB);

}  // namespace terms

}  // namespace absorb
