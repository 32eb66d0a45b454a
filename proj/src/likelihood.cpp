#include "absorb/likelihood.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <stdexcept>

#include "absorb/normal.hpp"

namespace absorb {

namespace {

constexpr double kLog2Pi = 2.0 * kLogSqrt2Pi;

// Bivariate normal log density with covariance [[a, b], [b, c]].
double log_bivariate_normal(double r1, double r2, double a, double b, double c) {
  const double det = a * c - b * b;
  if (!(a > 0.0 && c > 0.0 && det > 0.0)) return kNegInf;
  const double quad = (r1 * r1 * c - 2.0 * b * r1 * r2 + r2 * r2 * a) / det;
  return -kLog2Pi - 0.5 * std::log(det) - 0.5 * quad;
}

void check_latent_sizes(const LatentState& latents, const BivariateDataset& dataset, bool need_z) {
  if (latents.theta_both.size() != dataset.m1 || latents.theta_y1.size() != dataset.m2 ||
      latents.theta_y2.size() != dataset.m3) {
    throw std::invalid_argument("latent state does not match the dataset partition");
  }
  if (need_z && latents.z.size() != dataset.n()) {
    throw std::invalid_argument("latent state needs one z pair per modeled study");
  }
}

}  // namespace

std::string to_string(Model model) {
  switch (model) {
    case Model::Absorb: return "ABSORB";
    case Model::Nbc: return "NBC";
    case Model::AbsorbIsm: return "ABSORB_ISM";
  }
  return "?";
}

Model parse_model(std::string_view name) {
  std::string key(name);
  std::transform(key.begin(), key.end(), key.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (key == "absorb") return Model::Absorb;
  if (key == "nbc") return Model::Nbc;
  if (key == "ism" || key == "absorb-ism" || key == "absorb_ism") return Model::AbsorbIsm;
  throw std::invalid_argument("unknown model '" + std::string(name) + "'");
}

bool AbsorbParams::jointly_feasible() const {
  return rhoW * rhoW < (1.0 - rho1 * rho1) * (1.0 - rho2 * rho2);
}

PriorSpec PriorSpec::resolved_for(const BivariateDataset& dataset) const {
  PriorSpec out = *this;
  const auto ranges = observed_se_range(dataset);
  for (int j = 0; j < 2; ++j) {
    if (std::isnan(out.gamma1_upper[j])) out.gamma1_upper[j] = ranges[j].hi;
  }
  return out;
}

bool PriorSpec::resolved() const {
  return !std::isnan(gamma1_upper[0]) && !std::isnan(gamma1_upper[1]);
}

void PriorSpec::check() const {
  if (!(mu_sd > 0.0) || !(tau_scale > 0.0)) {
    throw std::invalid_argument("prior scales must be positive");
  }
  if (!(gamma0_range.length() > 0.0) || !(rho_range.length() > 0.0)) {
    throw std::invalid_argument("prior ranges must be non-degenerate");
  }
  if (rho_range.lo < -1.0 || rho_range.hi > 1.0) {
    throw std::invalid_argument("correlation prior range must lie within (-1, 1)");
  }
  if (!resolved()) throw std::invalid_argument("gamma1 upper bounds are unresolved");
  if (!(gamma1_upper[0] > 0.0) || !(gamma1_upper[1] > 0.0)) {
    throw std::invalid_argument("gamma1 upper bounds must be positive");
  }
}

double estimate_khat(const BivariateDataset& dataset, int endpoint) {
  double precision_sum = 0.0;
  double size_sum = 0.0;
  for (const auto& study : dataset.studies) {
    const auto s = study.s(endpoint);
    if (!study.reports(endpoint) || !s) continue;
    precision_sum += 1.0 / (*s * *s);
    size_sum += study.sample_size;
  }
  if (size_sum <= 0.0) {
    throw DataError("no study reports endpoint " + std::to_string(endpoint));
  }
  return precision_sum / size_sum;
}

ImputationReport impute_missing_se(const BivariateDataset& dataset) {
  ImputationReport report;
  report.k_hat1 = estimate_khat(dataset, 1);
  report.k_hat2 = estimate_khat(dataset, 2);
  for (const auto& study : dataset.studies) {
    const double n = study.sample_size;
    if (!study.reports(1)) report.imputed_s1[study.study_id] = std::sqrt(1.0 / (report.k_hat1 * n));
    if (!study.reports(2)) report.imputed_s2[study.study_id] = std::sqrt(1.0 / (report.k_hat2 * n));
  }
  return report;
}

std::vector<ModelStudy> model_studies(const BivariateDataset& dataset,
                                      const ImputationReport& imputed) {
  std::vector<ModelStudy> out;
  out.reserve(dataset.n());
  for (const auto& study : dataset.studies) {
    ModelStudy m;
    m.pattern = study.pattern();
    for (int j = 1; j <= 2; ++j) {
      const int k = j - 1;
      m.reported[k] = study.reports(j);
      if (m.reported[k]) {
        m.y[k] = *study.y(j);
        m.s[k] = *study.s(j);
      } else {
        const auto& table = j == 1 ? imputed.imputed_s1 : imputed.imputed_s2;
        const auto it = table.find(study.study_id);
        if (it == table.end()) {
          throw std::invalid_argument("no imputed SE for study '" + study.study_id + "'");
        }
        m.y[k] = 0.0;
        m.s[k] = it->second;
      }
    }
    out.push_back(m);
  }
  return out;
}

std::array<Interval, 2> observed_se_range(const BivariateDataset& dataset) {
  std::array<Interval, 2> out{Interval{kInf, kNegInf}, Interval{kInf, kNegInf}};
  for (const auto& study : dataset.studies) {
    for (int j = 1; j <= 2; ++j) {
      if (const auto s = study.s(j)) {
        out[j - 1].lo = std::min(out[j - 1].lo, *s);
        out[j - 1].hi = std::max(out[j - 1].hi, *s);
      }
    }
  }
  for (int j = 0; j < 2; ++j) {
    if (!(out[j].hi > 0.0)) throw DataError("no observed standard errors for endpoint " + std::to_string(j + 1));
  }
  return out;
}

double log_prior(const AbsorbParams& p, const PriorSpec& spec) {
  spec.check();
  double total = log_norm_pdf(p.mu1, 0.0, spec.mu_sd) + log_norm_pdf(p.mu2, 0.0, spec.mu_sd);
  total += log_half_cauchy_pdf(p.tau1, spec.tau_scale) + log_half_cauchy_pdf(p.tau2, spec.tau_scale);
  total += log_uniform_pdf(p.gamma01, spec.gamma0_range.lo, spec.gamma0_range.hi);
  total += log_uniform_pdf(p.gamma02, spec.gamma0_range.lo, spec.gamma0_range.hi);
  total += log_uniform_pdf(p.gamma11, 0.0, spec.gamma1_upper[0]);
  total += log_uniform_pdf(p.gamma12, 0.0, spec.gamma1_upper[1]);
  for (double r : {p.rho1, p.rho2, p.rhoW, p.rhoB}) {
    total += log_uniform_pdf(r, spec.rho_range.lo, spec.rho_range.hi);
  }
  return std::isnan(total) ? kNegInf : total;
}

double log_prior(const NbcParams& p, const PriorSpec& spec) {
  spec.check();
  double total = log_norm_pdf(p.mu1, 0.0, spec.mu_sd) + log_norm_pdf(p.mu2, 0.0, spec.mu_sd);
  total += log_half_cauchy_pdf(p.tau1, spec.tau_scale) + log_half_cauchy_pdf(p.tau2, spec.tau_scale);
  total += log_uniform_pdf(p.rhoW, spec.rho_range.lo, spec.rho_range.hi);
  total += log_uniform_pdf(p.rhoB, spec.rho_range.lo, spec.rho_range.hi);
  return std::isnan(total) ? kNegInf : total;
}

double log_latent_prior(double mu1, double mu2, double tau1, double tau2, double rhoB,
                        const LatentState& latents) {
  if (!(tau1 > 0.0 && tau2 > 0.0)) return kNegInf;
  double total = 0.0;
  for (const auto& theta : latents.theta_both) {
    total += terms::log_theta_pair_prior(theta, mu1, mu2, tau1, tau2, rhoB);
  }
  for (double t : latents.theta_y1) total += log_norm_pdf(t, mu1, tau1);
  for (double t : latents.theta_y2) total += log_norm_pdf(t, mu2, tau2);
  return total;
}

double log_missing_se_prior(const LatentState& latents, const std::array<Interval, 2>& bounds) {
  double total = 0.0;
  for (const auto& st : latents.s_tilde) {
    for (int j = 0; j < 2; ++j) {
      // Closed interval: the observed extremes themselves are admissible.
      if (!(st[j] >= bounds[j].lo && st[j] <= bounds[j].hi)) return kNegInf;
      if (bounds[j].length() > 0.0) total -= std::log(bounds[j].length());
    }
  }
  return total;
}

namespace terms {

double log_selection(double z, double mean, bool reported) {
  if (reported ? !(z > 0.0) : !(z < 0.0)) return kNegInf;
  const double log_mass = log_norm_cdf(reported ? mean : -mean);
  return log_std_norm_pdf(z - mean) - log_mass;
}

double log_outcomes_both(const ModelStudy& study, const std::array<double, 2>& theta,
                         const std::array<double, 2>& w, double rho1, double rho2, double rhoW) {
  const double s1 = study.s[0];
  const double s2 = study.s[1];
  const double r1 = study.y[0] - theta[0] - rho1 * s1 * w[0];
  const double r2 = study.y[1] - theta[1] - rho2 * s2 * w[1];
  return log_bivariate_normal(r1, r2, s1 * s1 * (1.0 - rho1 * rho1), rhoW * s1 * s2,
                              s2 * s2 * (1.0 - rho2 * rho2));
}

double log_outcome_single(double y, double theta, double s, double rho, double w) {
  const double var = s * s * (1.0 - rho * rho);
  if (!(var > 0.0)) return kNegInf;
  const double r = y - theta - rho * s * w;
  return -0.5 * r * r / var - 0.5 * std::log(var) - kLogSqrt2Pi;
}

double log_quadrant(double mean1, double mean2) {
  return log_norm_cdf(-mean1) + log_norm_cdf(-mean2);
}

double log_theta_pair_prior(const std::array<double, 2>& theta, double mu1, double mu2,
                            double tau1, double tau2, double rhoB) {
  return log_bivariate_normal(theta[0] - mu1, theta[1] - mu2, tau1 * tau1, rhoB * tau1 * tau2,
                              tau2 * tau2);
}

}  // namespace terms

double loglik_absorb(const AbsorbParams& p, const LatentState& latents,
                     const BivariateDataset& dataset, const ImputationReport& imputed) {
  check_latent_sizes(latents, dataset, true);
  if (!p.jointly_feasible() || std::abs(p.rho1) >= 1.0 || std::abs(p.rho2) >= 1.0) return kNegInf;
  const auto studies = model_studies(dataset, imputed);
  double total = 0.0;
  for (std::size_t i = 0; i < studies.size(); ++i) {
    const auto& st = studies[i];
    std::array<double, 2> w{};
    for (int k = 0; k < 2; ++k) {
      const double mean = terms::selection_mean(p.gamma0(k + 1), p.gamma1(k + 1), st.s[k]);
      total += terms::log_selection(latents.z[i][k], mean, st.reported[k]);
      w[k] = latents.z[i][k] - mean;
    }
    if (i < dataset.m1) {
      total += terms::log_outcomes_both(st, latents.theta_both[i], w, p.rho1, p.rho2, p.rhoW);
    } else if (i < dataset.m1 + dataset.m2) {
      total += terms::log_outcome_single(st.y[0], latents.theta_y1[i - dataset.m1], st.s[0], p.rho1, w[0]);
    } else {
      total += terms::log_outcome_single(st.y[1], latents.theta_y2[i - dataset.m1 - dataset.m2],
                                         st.s[1], p.rho2, w[1]);
    }
    if (total == kNegInf) return kNegInf;
  }
  return total;
}

double loglik_nbc(const NbcParams& p, const LatentState& latents, const BivariateDataset& dataset) {
  check_latent_sizes(latents, dataset, false);
  if (!(std::abs(p.rhoW) < 1.0)) return kNegInf;
  double total = 0.0;
  const std::array<double, 2> no_shift{0.0, 0.0};
  for (std::size_t i = 0; i < dataset.n(); ++i) {
    const auto& study = dataset.studies[i];
    if (i < dataset.m1) {
      ModelStudy st;
      st.y = {*study.y1, *study.y2};
      st.s = {*study.s1, *study.s2};
      total += terms::log_outcomes_both(st, latents.theta_both[i], no_shift, 0.0, 0.0, p.rhoW);
    } else if (i < dataset.m1 + dataset.m2) {
      total += terms::log_outcome_single(*study.y1, latents.theta_y1[i - dataset.m1], *study.s1, 0.0, 0.0);
    } else {
      total += terms::log_outcome_single(*study.y2, latents.theta_y2[i - dataset.m1 - dataset.m2],
                                         *study.s2, 0.0, 0.0);
    }
  }
  return total;
}

double loglik_ism(const AbsorbParams& p, const LatentState& latents,
                  const BivariateDataset& dataset, const ImputationReport& imputed) {
  if (latents.s_tilde.size() != dataset.k_missing) {
    throw std::invalid_argument("latent state needs one s_tilde pair per unreported study");
  }
  double total = loglik_absorb(p, latents, dataset, imputed);
  if (total == kNegInf) return total;
  for (const auto& st : latents.s_tilde) {
    if (!(st[0] > 0.0 && st[1] > 0.0)) return kNegInf;
    total += terms::log_quadrant(terms::selection_mean(p.gamma01, p.gamma11, st[0]),
                                 terms::selection_mean(p.gamma02, p.gamma12, st[1]));
  }
  return total;
}

}  // namespace absorb
