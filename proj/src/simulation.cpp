#include "absorb/simulation.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <algorithm>
#include <atomic>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <cstdio>
#include <exception>
#include <optional>
#include <stdexcept>
#include <thread>

#include "absorb/normal.hpp"
#include "absorb/orb_impact.hpp"
#include "absorb/random.hpp"

namespace absorb {

namespace {

struct DesignRow {
  double tau1, tau2, rho1, rho2, missing1, missing2;
};

constexpr DesignRow kDesigns[] = {
    {0.5, 0.5, 0.4, 0.4, 0.20, 0.20},
    {1.0, 1.0, 0.4, 0.4, 0.20, 0.20},
    {0.5, 0.5, 0.5, 0.7, 0.20, 0.40},
    {0.8, 0.4, 0.7, 0.3, 0.32, 0.12},
};

Eigen::Matrix4d error_correlation(const AbsorbParams& p) {
  Eigen::Matrix4d c;
  c << 1.0, p.rhoW, p.rho1, 0.0,
       p.rhoW, 1.0, 0.0, p.rho2,
       p.rho1, 0.0, 1.0, 0.0,
       0.0, p.rho2, 0.0, 1.0;
  return c;
}

struct FitOutcome {
  bool ok = false;
  bool converged = false;
  std::array<double, 2> mean{};
  std::array<bool, 2> covers{};
};

struct Replication {
  std::vector<FitOutcome> fits;
  std::array<double, 2> missing{};
};

FitOutcome fit_one(SimModel model, const SimDataset& data, const SamplerConfig& config) {
  FitOutcome out;
  BivariateDataset dataset = data.observed;
  Model fit_model = model == SimModel::Absorb ? Model::Absorb : Model::Nbc;
  if (model == SimModel::CompleteCaseNbc) {
    std::vector<StudyRecord> both(dataset.studies.begin(), dataset.studies.begin() + dataset.m1);
    dataset = detail::partition_unchecked(std::move(both));
  }
  dataset.k_missing = 0;
  if (dataset.m1 == 0) return out;
  try {
    const auto fit = run_mcmc(fit_model, dataset, PriorSpec{}, config);
    const std::array<double, 2> truth{data.truth.params.mu1, data.truth.params.mu2};
    for (int k = 0; k < 2; ++k) {
      const auto draws = fit.draws.combined(k == 0 ? Param::mu1 : Param::mu2);
      double sum = 0.0;
      for (double v : draws) sum += v;
      out.mean[k] = sum / static_cast<double>(draws.size());
      const auto ci = credible_interval(draws);
      out.covers[k] = ci.lower <= truth[k] && truth[k] <= ci.upper;
    }
    out.converged = fit.diagnostics.converged;
    out.ok = true;
  } catch (const DataError&) {
  } catch (const std::runtime_error&) {
  }
  return out;
}

std::string format_metric(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

void SimTruth::check() const {
  if (n_studies < 1) throw std::invalid_argument("n_studies must be positive");
  if (!(se_range.lo > 0.0 && se_range.hi >= se_range.lo)) {
    throw std::invalid_argument("se_range must be a positive interval");
  }
  if (size_range[0] < 2 || size_range[1] < size_range[0]) {
    throw std::invalid_argument("size_range must be an interval of sizes >= 2");
  }
  if (!(params.tau1 >= 0.0 && params.tau2 >= 0.0)) throw std::invalid_argument("tau must be non-negative");
  for (double r : {params.rho1, params.rho2, params.rhoW, params.rhoB}) {
    if (!(std::abs(r) < 1.0)) throw std::invalid_argument("correlations must lie in (-1, 1)");
  }
  if (!params.jointly_feasible()) {
    throw std::invalid_argument("rhoW^2 must be below (1 - rho1^2)(1 - rho2^2)");
  }
}

SimDataset generate_dataset(const SimTruth& truth, std::uint64_t seed) {
  truth.check();
  const auto& p = truth.params;
  const Eigen::LLT<Eigen::Matrix4d> llt(error_correlation(p));
  if (llt.info() != Eigen::Success) {
    throw std::invalid_argument("error correlation matrix is not positive definite");
  }
  const Eigen::Matrix4d l = llt.matrixL();
  const double rb = std::sqrt(1.0 - p.rhoB * p.rhoB);

  SimDataset out;
  out.truth = truth;
  out.seed = seed;
  RandomStream rng(seed);
  std::vector<StudyRecord> observed;
  std::array<long, 2> missing{0, 0};
  std::size_t neither = 0;
  const int width = truth.n_studies >= 1000 ? 4 : 3;
  for (int i = 0; i < truth.n_studies; ++i) {
    CompleteStudy st;
    char id[16];
    std::snprintf(id, sizeof id, "S%0*d", width, i + 1);
    st.study_id = id;
    st.sample_size = rng.uniform_int(truth.size_range[0], truth.size_range[1]);
    st.s1 = truth.se_range.lo + truth.se_range.length() * rng.uniform();
    st.s2 = truth.se_range.lo + truth.se_range.length() * rng.uniform();
    const double a = rng.normal();
    const double b = rng.normal();
    const double u1 = a;
    const double u2 = p.rhoB * a + rb * b;
    Eigen::Vector4d e;
    for (int k = 0; k < 4; ++k) e[k] = rng.normal();
    const Eigen::Vector4d c = l * e;  // (eps1, eps2, delta1, delta2)
    st.y1 = p.mu1 + p.tau1 * u1 + st.s1 * c[0];
    st.y2 = p.mu2 + p.tau2 * u2 + st.s2 * c[1];
    const std::array<double, 2> z{p.gamma01 + p.gamma11 / st.s1 + c[2],
                                  p.gamma02 + p.gamma12 / st.s2 + c[3]};
    out.z_truth.push_back(z);
    out.complete.push_back(st);

    StudyRecord rec;
    rec.study_id = st.study_id;
    rec.sample_size = st.sample_size;
    if (z[0] > 0.0) {
      rec.y1 = st.y1;
      rec.s1 = st.s1;
    } else {
      ++missing[0];
    }
    if (z[1] > 0.0) {
      rec.y2 = st.y2;
      rec.s2 = st.s2;
    } else {
      ++missing[1];
    }
    if (rec.y1 || rec.y2) {
      observed.push_back(std::move(rec));
    } else {
      ++neither;
    }
  }
  out.observed = detail::partition_unchecked(std::move(observed));
  out.observed.k_missing = neither;
  for (int k = 0; k < 2; ++k) out.realized_missing[k] = static_cast<double>(missing[k]) / truth.n_studies;
  return out;
}

double expected_missing(double gamma0, double gamma1, const Interval& se_range) {
  auto f = [&](double s) { return norm_cdf(-(gamma0 + gamma1 / s)); };
  if (!(se_range.length() > 0.0)) return f(se_range.lo);
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, se_range.lo, se_range.hi, 10, 1e-14) /
         se_range.length();
}

double calibrate_gamma0(double gamma1, double target_missing, const Interval& se_range) {
  if (!(target_missing > 0.0 && target_missing < 1.0)) {
    throw std::invalid_argument("target missing fraction must lie in (0, 1)");
  }
  double lo = -20.0, hi = 20.0;  // missingness decreases in gamma0
  for (int it = 0; it < 200 && hi - lo > 1e-12; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (expected_missing(mid, gamma1, se_range) > target_missing) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

SimTruth builtin_design(int experiment, int n_studies) {
  if (experiment < 1 || experiment > 4) throw std::invalid_argument("experiment must be 1, 2, 3 or 4");
  const auto& d = kDesigns[experiment - 1];
  SimTruth t;
  t.n_studies = n_studies;
  t.params.mu1 = 0.3;
  t.params.mu2 = -0.3;
  t.params.tau1 = d.tau1;
  t.params.tau2 = d.tau2;
  t.params.rho1 = d.rho1;
  t.params.rho2 = d.rho2;
  t.params.rhoW = 0.5;
  t.params.rhoB = 0.5;
  t.params.gamma11 = t.params.gamma12 = 0.6;
  t.target_missing_1 = d.missing1;
  t.target_missing_2 = d.missing2;
  t.params.gamma01 = calibrate_gamma0(0.6, d.missing1, t.se_range);
  t.params.gamma02 = calibrate_gamma0(0.6, d.missing2, t.se_range);
  t.check();
  return t;
}

std::string to_string(SimModel model) {
  switch (model) {
    case SimModel::Absorb: return "ABSORB";
    case SimModel::Nbc: return "NBC";
    case SimModel::CompleteCaseNbc: return "COMPLETE_CASE_NBC";
  }
  return "?";
}

std::vector<SimModel> parse_sim_models(std::string_view list) {
  std::vector<SimModel> out;
  std::size_t start = 0;
  while (start <= list.size()) {
    const auto pos = std::min(list.find(',', start), list.size());
    const auto name = list.substr(start, pos - start);
    SimModel m;
    if (name == "absorb") {
      m = SimModel::Absorb;
    } else if (name == "nbc") {
      m = SimModel::Nbc;
    } else if (name == "complete-case" || name == "cc") {
      m = SimModel::CompleteCaseNbc;
    } else {
      throw std::invalid_argument("unknown model '" + std::string(name) + "'");
    }
    if (std::find(out.begin(), out.end(), m) == out.end()) out.push_back(m);
    start = pos + 1;
  }
  return out;
}

std::string MetricsTable::csv() const {
  std::string out = "experiment,n,model,endpoint,bias,se,cp\n";
  for (const auto& r : rows) {
    out += r.experiment + ',' + std::to_string(r.n_studies) + ',' + to_string(r.model) + ',' +
           std::to_string(r.endpoint) + ',' + format_metric(r.bias) + ',' + format_metric(r.se) + ',' +
           format_metric(r.cp) + '\n';
  }
  return out;
}

MetricsTable run_experiment(const SimTruth& truth, const std::string& label, long n_replications,
                            const std::vector<SimModel>& models, const SamplerConfig& config,
                            std::uint64_t seed) {
  if (n_replications < 1) throw std::invalid_argument("n_replications must be at least 1");
  if (models.empty()) throw std::invalid_argument("no models requested");
  truth.check();
  config.check();

  std::vector<Replication> reps(static_cast<std::size_t>(n_replications));
  std::vector<std::exception_ptr> errors(reps.size());
  std::atomic<long> next{0};
  auto work = [&] {
    for (long r = next++; r < n_replications; r = next++) {
      try {
        const auto data = generate_dataset(truth, seed + static_cast<std::uint64_t>(r));
        SamplerConfig cfg = config;
        cfg.seed = seed + static_cast<std::uint64_t>(r);
        cfg.max_threads = 1;
        auto& rep = reps[r];
        rep.missing = data.realized_missing;
        for (SimModel m : models) rep.fits.push_back(fit_one(m, data, cfg));
      } catch (...) {
        errors[r] = std::current_exception();
      }
    }
  };
  const int threads = static_cast<int>(std::min<long>(worker_threads(config.max_threads), n_replications));
  if (threads <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  MetricsTable table;
  table.n_replications = n_replications;
  for (const auto& rep : reps) {
    for (int k = 0; k < 2; ++k) table.mean_missing[k] += rep.missing[k] / static_cast<double>(n_replications);
  }
  const std::array<double, 2> truth_mu{truth.params.mu1, truth.params.mu2};
  for (std::size_t mi = 0; mi < models.size(); ++mi) {
    const std::string name = to_string(models[mi]);
    long failed = 0, unconverged = 0;
    for (const auto& rep : reps) {
      if (!rep.fits[mi].ok) {
        ++failed;
      } else if (!rep.fits[mi].converged) {
        ++unconverged;
      }
    }
    table.failed[name] = failed;
    table.non_converged[name] = unconverged;
    if (5 * (failed + unconverged) > n_replications) {
      table.warnings.push_back(name + ": " + std::to_string(failed + unconverged) + " of " +
                               std::to_string(n_replications) + " replications failed or did not converge");
    }
    for (int k = 0; k < 2; ++k) {
      // Welford accumulation in replication order.
      long count = 0;
      double mean = 0.0, m2 = 0.0, covered = 0.0;
      for (const auto& rep : reps) {
        const auto& fit = rep.fits[mi];
        if (!fit.ok) continue;
        ++count;
        const double err = fit.mean[k] - truth_mu[k];
        const double delta = err - mean;
        mean += delta / static_cast<double>(count);
        m2 += delta * (err - mean);
        covered += fit.covers[k] ? 1.0 : 0.0;
      }
      MetricsRow row;
      row.experiment = label;
      row.n_studies = truth.n_studies;
      row.model = models[mi];
      row.endpoint = k + 1;
      row.n_replications = count;
      if (count > 0) {
        row.bias = mean;
        row.se = count > 1 ? std::sqrt(m2 / static_cast<double>(count - 1)) : 0.0;
        row.cp = covered / static_cast<double>(count);
      } else {
        row.bias = row.se = row.cp = std::nan("");
      }
      table.rows.push_back(row);
    }
  }
  return table;
}

}  // namespace absorb
