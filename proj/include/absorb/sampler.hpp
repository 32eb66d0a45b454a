#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "absorb/data_model.hpp"
#include "absorb/likelihood.hpp"

namespace absorb {

/// Structural parameters in draw-export column order.
enum class Param : int {
  mu1, mu2, tau1, tau2, gamma01, gamma11, gamma02, gamma12, rho1, rho2, rhoW, rhoB
};
inline constexpr int kNumParams = 12;

std::string_view param_name(Param p);
std::optional<Param> param_from_name(std::string_view name);
/// Parameters carried by a model, in export order (NBC drops the selection ones).
std::vector<Param> model_params(Model model);

double get_param(const AbsorbParams& p, Param which);
void set_param(AbsorbParams& p, Param which, double value);

struct SamplerConfig {
  int n_chains = 3;
  long n_iter = 50000;
  long burn_in = 10000;
  int thin = 1;
  std::uint64_t seed = 0;
  double ess_floor = 100.0;
  int max_iter_doublings = 2;
  int adapt_window = 50;
  double target_accept = 0.44;

  /// Parameters held at a constant value instead of being sampled.
  std::map<Param, double> fixed;
  /// Drop the likelihood: the chain targets the prior.
  bool prior_only = false;
  /// Keep per-iteration study effects (column 2*i + k for study i, endpoint k).
  bool record_latents = false;
  /// Assert state invariants every iteration (throws std::logic_error).
  bool debug_checks = false;
  /// Upper bound on worker threads; 0 means ABSORB_THREADS or hardware concurrency.
  int max_threads = 0;

  long retained_per_chain() const;
  /// Throws std::invalid_argument when the configuration is unusable.
  void check() const;
};

struct Chain {
  int chain_index = 0;
  /// One column per Param; columns of parameters the model lacks stay empty.
  std::array<std::vector<double>, kNumParams> draws;
  std::map<std::string, double> accept_rates;
  std::vector<std::vector<double>> latent_trace;

  std::size_t size() const { return draws[0].size(); }
  const std::vector<double>& column(Param p) const { return draws[static_cast<int>(p)]; }
};

struct PosteriorDraws {
  std::vector<Chain> chains;
  Model model = Model::Absorb;
  std::string dataset_fingerprint;
  SamplerConfig config;

  std::size_t total_draws() const;
  /// All chains concatenated in chain order.
  std::vector<double> combined(Param p) const;
  std::vector<std::vector<double>> per_chain(Param p) const;
};

struct DiagnosticsReport {
  std::map<std::string, double> ess;
  std::map<std::string, double> split_rhat;
  bool converged = false;
  long iterations_used = 0;
  int doublings = 0;
  std::vector<std::string> warnings;
};

/// Convergence summary of a finished set of chains.
DiagnosticsReport diagnose(const PosteriorDraws& draws);

struct McmcResult {
  PosteriorDraws draws;
  DiagnosticsReport diagnostics;
};

/// Metropolis-within-Gibbs with latent selection variables. Chains are seeded
/// from (config.seed, chain_index) and may run in parallel; output does not
/// depend on scheduling. Reruns with doubled n_iter while the ESS of mu1 or
/// mu2 is below config.ess_floor, up to config.max_iter_doublings times.
McmcResult run_mcmc(Model model, const BivariateDataset& dataset, const PriorSpec& prior,
                    const SamplerConfig& config);

/// Number of worker threads honoring ABSORB_THREADS.
int worker_threads(int requested_cap = 0);

}  // namespace absorb
