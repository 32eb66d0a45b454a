#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "absorb/data_model.hpp"
#include "absorb/likelihood.hpp"
#include "absorb/sampler.hpp"

namespace absorb {

struct SimTruth {
  AbsorbParams params;
  int n_studies = 50;
  Interval se_range{0.2, 0.8};
  std::array<int, 2> size_range{20, 100};
  double target_missing_1 = 0.0;
  double target_missing_2 = 0.0;

  /// Throws std::invalid_argument when the truth cannot generate data.
  void check() const;
};

struct CompleteStudy {
  std::string study_id;
  int sample_size = 0;
  double y1 = 0.0, s1 = 0.0, y2 = 0.0, s2 = 0.0;
};

struct SimDataset {
  /// Studies reporting at least one outcome; k_missing counts the rest.
  BivariateDataset observed;
  std::vector<CompleteStudy> complete;
  std::vector<std::array<double, 2>> z_truth;
  SimTruth truth;
  std::uint64_t seed = 0;
  std::array<double, 2> realized_missing{};
};

/// Draws a dataset from the selection model. Deterministic in (truth, seed).
/// Throws std::invalid_argument when the within-study correlation matrix of
/// (eps1, eps2, delta1, delta2) is not positive definite.
SimDataset generate_dataset(const SimTruth& truth, std::uint64_t seed);

/// Expected fraction of studies not reporting an endpoint, E_s Phi(-(g0 + g1/s))
/// with s uniform on se_range.
double expected_missing(double gamma0, double gamma1, const Interval& se_range);

/// gamma0 giving the target expected missing fraction.
double calibrate_gamma0(double gamma1, double target_missing, const Interval& se_range);

/// Experiments 1-4: mu = (0.3, -0.3), gamma1 = 0.6, rhoW = rhoB = 0.5, with the
/// design's tau, rho and missingness targets; gamma0 calibrated to the targets.
SimTruth builtin_design(int experiment, int n_studies);

enum class SimModel { Absorb, Nbc, CompleteCaseNbc };

std::string to_string(SimModel model);
/// Comma-separated list of absorb, nbc, complete-case.
std::vector<SimModel> parse_sim_models(std::string_view list);

struct MetricsRow {
  std::string experiment;
  int n_studies = 0;
  SimModel model = SimModel::Absorb;
  int endpoint = 1;
  double bias = 0.0;
  double se = 0.0;
  double cp = 0.0;
  long n_replications = 0;
};

struct MetricsTable {
  std::vector<MetricsRow> rows;
  long n_replications = 0;
  std::map<std::string, long> non_converged;
  std::map<std::string, long> failed;
  std::array<double, 2> mean_missing{};
  std::vector<std::string> warnings;

  /// `experiment,n,model,endpoint,bias,se,cp`
  std::string csv() const;
};

/// For r in [0, n_replications): data from generate_dataset(truth, seed + r),
/// each model fitted with sampler seed seed + r; posterior means and 95%
/// intervals aggregated into bias, SE and coverage. Replications may run in
/// parallel; the result does not depend on scheduling.
MetricsTable run_experiment(const SimTruth& truth, const std::string& label, long n_replications,
                            const std::vector<SimModel>& models, const SamplerConfig& config,
                            std::uint64_t seed);

}  // namespace absorb
