#include "absorb/sampler.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <stdexcept>
#include <thread>

#include "absorb/diagnostics.hpp"
#include "absorb/normal.hpp"
#include "absorb/random.hpp"
#include "absorb/truncated_normal.hpp"

namespace absorb {

namespace {

constexpr std::array<std::string_view, kNumParams> kParamNames{
    "mu1", "mu2", "tau1", "tau2", "gamma01", "gamma11",
    "gamma02", "gamma12", "rho1", "rho2", "rhoW", "rhoB"};

// Symmetric 2x2 matrix [[a, b], [b, c]].
struct Sym2 {
  double a, b, c;
  double det() const { return a * c - b * b; }
  Sym2 inverse() const {
    const double d = det();
    return {c / d, -b / d, a / d};
  }
  Sym2 operator+(const Sym2& o) const { return {a + o.a, b + o.b, c + o.c}; }
  std::array<double, 2> apply(const std::array<double, 2>& v) const {
    return {a * v[0] + b * v[1], b * v[0] + c * v[1]};
  }
};

std::array<double, 2> draw_bivariate(const std::array<double, 2>& mean, const Sym2& cov,
                                     RandomStream& rng) {
  const double l11 = std::sqrt(cov.a);
  const double l21 = cov.b / l11;
  const double l22 = std::sqrt(std::max(cov.c - l21 * l21, 0.0));
  const double n1 = rng.normal();
  const double n2 = rng.normal();
  return {mean[0] + l11 * n1, mean[1] + l21 * n1 + l22 * n2};
}

enum class Transform { Log, Tanh, Logit };

// Random-walk proposal on an unbounded scale for a bounded scalar.
struct Walk {
  Param param;
  Transform transform;
  double lo = 0.0;
  double hi = 0.0;
  double scale = 0.3;
  long window_accepts = 0;
  long window_tries = 0;
  long accepts = 0;
  long tries = 0;

  double to_free(double x) const {
    switch (transform) {
      case Transform::Log: return std::log(x);
      case Transform::Tanh: return std::atanh(2.0 * (x - lo) / (hi - lo) - 1.0);
      case Transform::Logit: {
        const double u = (x - lo) / (hi - lo);
        return std::log(u / (1.0 - u));
      }
    }
    return x;
  }
  double from_free(double eta) const {
    switch (transform) {
      case Transform::Log: return std::exp(eta);
      case Transform::Tanh: return lo + 0.5 * (hi - lo) * (std::tanh(eta) + 1.0);
      case Transform::Logit: return lo + (hi - lo) / (1.0 + std::exp(-eta));
    }
    return eta;
  }
  // log |dx/deta|, dropping constants.
  double log_jacobian(double eta) const {
    switch (transform) {
      case Transform::Log: return eta;
      case Transform::Tanh: {
        const double t = std::tanh(eta);
        return std::log1p(-t * t);
      }
      case Transform::Logit: return -std::abs(eta) - 2.0 * std::log1p(std::exp(-std::abs(eta)));
    }
    return 0.0;
  }
};

class ChainRunner {
public:
  ChainRunner(Model model, const BivariateDataset& dataset, const ImputationReport& imputed,
              const PriorSpec& prior, const SamplerConfig& config, int chain_index, long n_iter)
      : model_(model),
        selection_(model != Model::Nbc),
        prior_(prior),
        cfg_(config),
        chain_index_(chain_index),
        n_iter_(n_iter),
        studies_(model_studies(dataset, imputed)),
        m1_(dataset.m1),
        m2_(dataset.m2),
        rng_(config.seed, static_cast<std::uint64_t>(chain_index)) {
    if (model_ == Model::AbsorbIsm) {
      se_bounds_ = observed_se_range(dataset);
      s_tilde_.assign(dataset.k_missing, {0.5 * (se_bounds_[0].lo + se_bounds_[0].hi),
                                          0.5 * (se_bounds_[1].lo + se_bounds_[1].hi)});
    }
    build_walks();
  }

  Chain run() {
    initialize();
    Chain chain;
    chain.chain_index = chain_index_;
    const auto params = model_params(model_);
    const long retained = cfg_.retained_per_chain();
    for (Param p : params) chain.draws[static_cast<int>(p)].reserve(retained);
    if (cfg_.record_latents) chain.latent_trace.assign(2 * studies_.size(), {});

    for (long it = 0; it < n_iter_; ++it) {
      const bool burning = it < cfg_.burn_in;
      sweep(burning);
      if (burning && (it + 1) % cfg_.adapt_window == 0) adapt();
      if (!burning && (it - cfg_.burn_in) % cfg_.thin == 0) {
        for (Param p : params) chain.draws[static_cast<int>(p)].push_back(get_param(p_, p));
        if (cfg_.record_latents) {
          for (std::size_t i = 0; i < studies_.size(); ++i) {
            chain.latent_trace[2 * i].push_back(theta_[i][0]);
            chain.latent_trace[2 * i + 1].push_back(theta_[i][1]);
          }
        }
      }
      if (cfg_.debug_checks) check_invariants();
    }
    for (const auto& w : walks_) {
      chain.accept_rates[std::string(param_name(w.param))] =
          w.tries > 0 ? static_cast<double>(w.accepts) / static_cast<double>(w.tries) : 0.0;
    }
    for (int j = 0; j < 2; ++j) {
      if (s_walk_[j].tries > 0) {
        chain.accept_rates["s_tilde" + std::to_string(j + 1)] =
            static_cast<double>(s_walk_[j].accepts) / static_cast<double>(s_walk_[j].tries);
      }
    }
    return chain;
  }

private:
  bool is_fixed(Param p) const { return cfg_.fixed.count(p) > 0; }

  double selection_mean(std::size_t i, int k) const {
    return terms::selection_mean(p_.gamma0(k + 1), p_.gamma1(k + 1), studies_[i].s[k]);
  }
  std::array<double, 2> residual(std::size_t i) const {
    if (!selection_) return {0.0, 0.0};
    return {z_[i][0] - selection_mean(i, 0), z_[i][1] - selection_mean(i, 1)};
  }
  int single_endpoint(std::size_t i) const { return i < m1_ + m2_ ? 0 : 1; }

  void build_walks() {
    auto add = [&](Param p, Transform t, double lo, double hi, double scale) {
      if (!is_fixed(p)) walks_.push_back(Walk{p, t, lo, hi, scale});
    };
    add(Param::tau1, Transform::Log, 0.0, 0.0, 0.3);
    add(Param::tau2, Transform::Log, 0.0, 0.0, 0.3);
    add(Param::rhoB, Transform::Tanh, prior_.rho_range.lo, prior_.rho_range.hi, 0.3);
    add(Param::rhoW, Transform::Tanh, prior_.rho_range.lo, prior_.rho_range.hi, 0.3);
    if (selection_) {
      add(Param::rho1, Transform::Tanh, prior_.rho_range.lo, prior_.rho_range.hi, 0.3);
      add(Param::rho2, Transform::Tanh, prior_.rho_range.lo, prior_.rho_range.hi, 0.3);
      add(Param::gamma01, Transform::Logit, prior_.gamma0_range.lo, prior_.gamma0_range.hi, 0.5);
      add(Param::gamma11, Transform::Logit, 0.0, prior_.gamma1_upper[0], 0.5);
      add(Param::gamma02, Transform::Logit, prior_.gamma0_range.lo, prior_.gamma0_range.hi, 0.5);
      add(Param::gamma12, Transform::Logit, 0.0, prior_.gamma1_upper[1], 0.5);
    }
    for (int j = 0; j < 2; ++j) {
      s_walk_[j] = Walk{Param::mu1, Transform::Logit, se_bounds_[j].lo, se_bounds_[j].hi, 0.5};
    }
  }

  // --- log-density pieces ----------------------------------------------------

  double param_prior(Param p) const {
    const double x = get_param(p_, p);
    switch (p) {
      case Param::mu1:
      case Param::mu2: return log_norm_pdf(x, 0.0, prior_.mu_sd);
      case Param::tau1:
      case Param::tau2: return log_half_cauchy_pdf(x, prior_.tau_scale);
      case Param::gamma01:
      case Param::gamma02: return log_uniform_pdf(x, prior_.gamma0_range.lo, prior_.gamma0_range.hi);
      case Param::gamma11: return log_uniform_pdf(x, 0.0, prior_.gamma1_upper[0]);
      case Param::gamma12: return log_uniform_pdf(x, 0.0, prior_.gamma1_upper[1]);
      default: return log_uniform_pdf(x, prior_.rho_range.lo, prior_.rho_range.hi);
    }
  }

  double theta_prior_sum() const {
    double total = 0.0;
    for (std::size_t i = 0; i < studies_.size(); ++i) {
      if (i < m1_) {
        total += terms::log_theta_pair_prior(theta_[i], p_.mu1, p_.mu2, p_.tau1, p_.tau2, p_.rhoB);
      } else {
        const int k = single_endpoint(i);
        total += log_norm_pdf(theta_[i][k], k == 0 ? p_.mu1 : p_.mu2, k == 0 ? p_.tau1 : p_.tau2);
      }
    }
    return total;
  }

  double outcome_both_sum() const {
    const double r1 = selection_ ? p_.rho1 : 0.0;
    const double r2 = selection_ ? p_.rho2 : 0.0;
    double total = 0.0;
    for (std::size_t i = 0; i < m1_; ++i) {
      total += terms::log_outcomes_both(studies_[i], theta_[i], residual(i), r1, r2, p_.rhoW);
    }
    return total;
  }

  double outcome_single_sum(int k) const {
    const double rho = selection_ ? p_.rho(k + 1) : 0.0;
    double total = 0.0;
    for (std::size_t i = m1_; i < studies_.size(); ++i) {
      if (single_endpoint(i) != k) continue;
      const double w = selection_ ? z_[i][k] - selection_mean(i, k) : 0.0;
      total += terms::log_outcome_single(studies_[i].y[k], theta_[i][k], studies_[i].s[k], rho, w);
    }
    return total;
  }

  double selection_sum(int k) const {
    double total = 0.0;
    for (std::size_t i = 0; i < studies_.size(); ++i) {
      total += terms::log_selection(z_[i][k], selection_mean(i, k), studies_[i].reported[k]);
      if (total == kNegInf) break;
    }
    return total;
  }

  double quadrant_sum(int k) const {
    double total = 0.0;
    for (const auto& st : s_tilde_) {
      total += log_norm_cdf(-terms::selection_mean(p_.gamma0(k + 1), p_.gamma1(k + 1), st[k]));
    }
    return total;
  }

  bool feasible() const {
    return !selection_ || (p_.jointly_feasible() && std::abs(p_.rho1) < 1.0 && std::abs(p_.rho2) < 1.0);
  }

  // Terms of the log posterior that involve parameter p.
  double partial_target(Param p) const {
    double total = param_prior(p);
    if (total == kNegInf || !feasible()) return kNegInf;
    if (cfg_.prior_only) return total;
    switch (p) {
      case Param::tau1:
      case Param::tau2:
      case Param::rhoB: return total + theta_prior_sum();
      case Param::rhoW: return total + outcome_both_sum();
      case Param::rho1: return total + outcome_both_sum() + outcome_single_sum(0);
      case Param::rho2: return total + outcome_both_sum() + outcome_single_sum(1);
      case Param::gamma01:
      case Param::gamma11: {
        total += selection_sum(0);
        if (total == kNegInf) return total;
        return total + outcome_both_sum() + outcome_single_sum(0) + quadrant_sum(0);
      }
      case Param::gamma02:
      case Param::gamma12: {
        total += selection_sum(1);
        if (total == kNegInf) return total;
        return total + outcome_both_sum() + outcome_single_sum(1) + quadrant_sum(1);
      }
      default: return total;
    }
  }

  double full_target() const {
    double total = 0.0;
    for (Param p : model_params(model_)) total += param_prior(p);
    if (total == kNegInf || !feasible()) return kNegInf;
    if (cfg_.prior_only) return total;
    total += theta_prior_sum() + outcome_both_sum() + outcome_single_sum(0) + outcome_single_sum(1);
    if (selection_) total += selection_sum(0) + selection_sum(1) + quadrant_sum(0) + quadrant_sum(1);
    return total;
  }

  // --- initialization ------------------------------------------------------------

  void initialize() {
    for (int k = 0; k < 2; ++k) {
      double sum = 0.0, sum_sq = 0.0, se_sq = 0.0;
      int count = 0;
      for (const auto& st : studies_) {
        if (!st.reported[k]) continue;
        sum += st.y[k];
        sum_sq += st.y[k] * st.y[k];
        se_sq += st.s[k] * st.s[k];
        ++count;
      }
      double mu = count > 0 ? sum / count : 0.0;
      double tau = 0.5;
      if (count >= 2) {
        const double var = (sum_sq - sum * sum / count) / (count - 1);
        tau = std::sqrt(std::max(var - se_sq / count, 0.01));
      }
      mu += 0.5 * tau * rng_.normal();
      set_param(p_, k == 0 ? Param::mu1 : Param::mu2, mu);
      set_param(p_, k == 0 ? Param::tau1 : Param::tau2, tau);
    }
    auto inside = [](double x, const Interval& r) { return r.contains_open(x) ? x : 0.5 * (r.lo + r.hi); };
    p_.rho1 = p_.rho2 = p_.rhoW = p_.rhoB = inside(0.0, prior_.rho_range);
    p_.gamma01 = p_.gamma02 = inside(0.0, prior_.gamma0_range);
    p_.gamma11 = 0.5 * prior_.gamma1_upper[0];
    p_.gamma12 = 0.5 * prior_.gamma1_upper[1];
    if (!selection_) p_.rho1 = p_.rho2 = 0.0;
    for (const auto& [param, value] : cfg_.fixed) set_param(p_, param, value);

    theta_.resize(studies_.size());
    z_.assign(studies_.size(), {0.0, 0.0});
    for (std::size_t i = 0; i < studies_.size(); ++i) {
      for (int k = 0; k < 2; ++k) {
        theta_[i][k] = studies_[i].reported[k] ? studies_[i].y[k] : (k == 0 ? p_.mu1 : p_.mu2);
      }
    }
    for (int attempt = 0; attempt < 100; ++attempt) {
      if (selection_) {
        for (std::size_t i = 0; i < studies_.size(); ++i) {
          for (int k = 0; k < 2; ++k) {
            const double m = selection_mean(i, k);
            z_[i][k] = studies_[i].reported[k] ? sample_truncated_normal(m, 1.0, 0.0, kInf, rng_)
                                               : sample_truncated_normal(m, 1.0, kNegInf, 0.0, rng_);
          }
        }
      }
      if (std::isfinite(full_target())) return;
    }
    throw std::runtime_error("non-finite log-posterior at initialization after 100 re-draws");
  }

  // --- Gibbs steps ------------------------------------------------------------------

  Sym2 outcome_cov(std::size_t i) const {
    const auto& st = studies_[i];
    const double r1 = selection_ ? p_.rho1 : 0.0;
    const double r2 = selection_ ? p_.rho2 : 0.0;
    return {st.s[0] * st.s[0] * (1.0 - r1 * r1), p_.rhoW * st.s[0] * st.s[1],
            st.s[1] * st.s[1] * (1.0 - r2 * r2)};
  }

  void draw_z() {
    for (std::size_t i = 0; i < studies_.size(); ++i) {
      const auto& st = studies_[i];
      const double m1 = selection_mean(i, 0);
      const double m2 = selection_mean(i, 1);
      if (i < m1_) {
        // Exact bivariate conditional of w = z - m given y, updated one coordinate at a time.
        const Sym2 prec = outcome_cov(i).inverse();
        const double d1 = p_.rho1 * st.s[0];
        const double d2 = p_.rho2 * st.s[1];
        const std::array<double, 2> e{st.y[0] - theta_[i][0], st.y[1] - theta_[i][1]};
        const auto pe = prec.apply(e);
        const double q11 = 1.0 + d1 * d1 * prec.a;
        const double q22 = 1.0 + d2 * d2 * prec.c;
        const double q12 = d1 * d2 * prec.b;
        double w1 = z_[i][0] - m1;
        double w2 = z_[i][1] - m2;
        w1 = sample_truncated_normal((d1 * pe[0] - q12 * w2) / q11, 1.0 / std::sqrt(q11), -m1, kInf, rng_);
        w2 = sample_truncated_normal((d2 * pe[1] - q12 * w1) / q22, 1.0 / std::sqrt(q22), -m2, kInf, rng_);
        z_[i] = {m1 + w1, m2 + w2};
        continue;
      }
      const int k = single_endpoint(i);
      const double m_rep = k == 0 ? m1 : m2;
      const double m_miss = k == 0 ? m2 : m1;
      const double rho = p_.rho(k + 1);
      const double mean = rho * (st.y[k] - theta_[i][k]) / st.s[k];
      z_[i][k] = m_rep + sample_truncated_normal(mean, std::sqrt(1.0 - rho * rho), -m_rep, kInf, rng_);
      z_[i][1 - k] = sample_truncated_normal(m_miss, 1.0, kNegInf, 0.0, rng_);
    }
  }

  void draw_theta() {
    const Sym2 t{p_.tau1 * p_.tau1, p_.rhoB * p_.tau1 * p_.tau2, p_.tau2 * p_.tau2};
    const Sym2 t_inv = t.inverse();
    const auto prior_lin = t_inv.apply({p_.mu1, p_.mu2});
    for (std::size_t i = 0; i < studies_.size(); ++i) {
      const auto& st = studies_[i];
      const auto w = residual(i);
      if (i < m1_) {
        const double d1 = selection_ ? p_.rho1 * st.s[0] : 0.0;
        const double d2 = selection_ ? p_.rho2 * st.s[1] : 0.0;
        const Sym2 prec = outcome_cov(i).inverse();
        const auto lin = prec.apply({st.y[0] - d1 * w[0], st.y[1] - d2 * w[1]});
        const Sym2 cov = (t_inv + prec).inverse();
        const auto mean = cov.apply({prior_lin[0] + lin[0], prior_lin[1] + lin[1]});
        theta_[i] = draw_bivariate(mean, cov, rng_);
        continue;
      }
      const int k = single_endpoint(i);
      const double rho = selection_ ? p_.rho(k + 1) : 0.0;
      const double tau = k == 0 ? p_.tau1 : p_.tau2;
      const double mu = k == 0 ? p_.mu1 : p_.mu2;
      const double v = st.s[k] * st.s[k] * (1.0 - rho * rho);
      const double r = st.y[k] - rho * st.s[k] * w[k];
      const double var = 1.0 / (1.0 / (tau * tau) + 1.0 / v);
      theta_[i][k] = var * (mu / (tau * tau) + r / v) + std::sqrt(var) * rng_.normal();
      theta_[i][1 - k] = 0.0;
    }
  }

  void draw_mu() {
    const bool fix1 = is_fixed(Param::mu1);
    const bool fix2 = is_fixed(Param::mu2);
    if (fix1 && fix2) return;
    const double prior_prec = 1.0 / (prior_.mu_sd * prior_.mu_sd);
    Sym2 prec{prior_prec, 0.0, prior_prec};
    std::array<double, 2> lin{0.0, 0.0};
    if (!cfg_.prior_only) {
      const Sym2 t_inv = Sym2{p_.tau1 * p_.tau1, p_.rhoB * p_.tau1 * p_.tau2, p_.tau2 * p_.tau2}.inverse();
      std::array<double, 2> sum_both{0.0, 0.0};
      std::array<double, 2> sum_single{0.0, 0.0};
      std::array<double, 2> count_single{0.0, 0.0};
      for (std::size_t i = 0; i < studies_.size(); ++i) {
        if (i < m1_) {
          sum_both[0] += theta_[i][0];
          sum_both[1] += theta_[i][1];
        } else {
          const int k = single_endpoint(i);
          sum_single[k] += theta_[i][k];
          count_single[k] += 1.0;
        }
      }
      const double m1 = static_cast<double>(m1_);
      prec = prec + Sym2{m1 * t_inv.a + count_single[0] / (p_.tau1 * p_.tau1), m1 * t_inv.b,
                         m1 * t_inv.c + count_single[1] / (p_.tau2 * p_.tau2)};
      const auto lb = t_inv.apply(sum_both);
      lin = {lb[0] + sum_single[0] / (p_.tau1 * p_.tau1), lb[1] + sum_single[1] / (p_.tau2 * p_.tau2)};
    }
    const Sym2 cov = prec.inverse();
    const auto mean = cov.apply(lin);
    if (!fix1 && !fix2) {
      const auto mu = draw_bivariate(mean, cov, rng_);
      p_.mu1 = mu[0];
      p_.mu2 = mu[1];
    } else if (fix1) {
      const double m = mean[1] + cov.b / cov.a * (p_.mu1 - mean[0]);
      p_.mu2 = m + std::sqrt(cov.c - cov.b * cov.b / cov.a) * rng_.normal();
    } else {
      const double m = mean[0] + cov.b / cov.c * (p_.mu2 - mean[1]);
      p_.mu1 = m + std::sqrt(cov.a - cov.b * cov.b / cov.c) * rng_.normal();
    }
  }

  void metropolis(Walk& walk, bool burning) {
    const double current = get_param(p_, walk.param);
    const double eta = walk.to_free(current);
    const double eta_new = eta + walk.scale * rng_.normal();
    const double proposal = walk.from_free(eta_new);
    const double log_u = std::log(rng_.uniform());
    bool accept = false;
    const double before = partial_target(walk.param) + walk.log_jacobian(eta);
    set_param(p_, walk.param, proposal);
    const double after = partial_target(walk.param) + walk.log_jacobian(eta_new);
    accept = std::isfinite(after) && log_u < after - before;
    if (!accept) set_param(p_, walk.param, current);
    record(walk, accept, burning);
  }

  void metropolis_s_tilde(bool burning) {
    for (int k = 0; k < 2; ++k) {
      Walk& walk = s_walk_[k];
      if (!(walk.hi > walk.lo)) continue;
      for (auto& st : s_tilde_) {
        const double current = st[k];
        const double eta = walk.to_free(current);
        const double eta_new = eta + walk.scale * rng_.normal();
        const double proposal = walk.from_free(eta_new);
        const double log_u = std::log(rng_.uniform());
        const double g0 = p_.gamma0(k + 1);
        const double g1 = p_.gamma1(k + 1);
        const double before = log_norm_cdf(-terms::selection_mean(g0, g1, current)) + walk.log_jacobian(eta);
        const double after = log_norm_cdf(-terms::selection_mean(g0, g1, proposal)) + walk.log_jacobian(eta_new);
        const bool accept = proposal > walk.lo && proposal < walk.hi && log_u < after - before;
        if (accept) st[k] = proposal;
        record(walk, accept, burning);
      }
    }
  }

  static void record(Walk& walk, bool accept, bool burning) {
    if (burning) {
      ++walk.window_tries;
      walk.window_accepts += accept;
    } else {
      ++walk.tries;
      walk.accepts += accept;
    }
  }

  void adapt() {
    auto tune = [&](Walk& w) {
      if (w.window_tries == 0) return;
      const double rate = static_cast<double>(w.window_accepts) / static_cast<double>(w.window_tries);
      w.scale = std::clamp(w.scale * std::exp(2.0 * (rate - cfg_.target_accept)), 1e-4, 20.0);
      w.window_tries = w.window_accepts = 0;
    };
    for (auto& w : walks_) tune(w);
    for (auto& w : s_walk_) tune(w);
  }

  void sweep(bool burning) {
    if (cfg_.prior_only) {
      draw_mu();
      for (auto& w : walks_) metropolis(w, burning);
      return;
    }
    if (selection_) draw_z();
    draw_theta();
    draw_mu();
    for (auto& w : walks_) metropolis(w, burning);
    if (!s_tilde_.empty()) metropolis_s_tilde(burning);
  }

  void check_invariants() const {
    if (!std::isfinite(param_prior(Param::mu1) + param_prior(Param::mu2))) {
      throw std::logic_error("mu left its support");
    }
    for (Param p : model_params(model_)) {
      if (!std::isfinite(param_prior(p))) {
        throw std::logic_error(std::string(param_name(p)) + " left its prior support");
      }
    }
    if (!feasible()) throw std::logic_error("correlations left the feasible region");
    if (!selection_ || cfg_.prior_only) return;
    for (std::size_t i = 0; i < studies_.size(); ++i) {
      for (int k = 0; k < 2; ++k) {
        if ((z_[i][k] > 0.0) != studies_[i].reported[k]) {
          throw std::logic_error("selection latent sign disagrees with the reporting pattern");
        }
      }
    }
    for (const auto& st : s_tilde_) {
      for (int k = 0; k < 2; ++k) {
        if (st[k] < se_bounds_[k].lo || st[k] > se_bounds_[k].hi) {
          throw std::logic_error("missing-study SE left its bounds");
        }
      }
    }
  }

  Model model_;
  bool selection_;
  PriorSpec prior_;
  const SamplerConfig& cfg_;
  int chain_index_;
  long n_iter_;
  std::vector<ModelStudy> studies_;
  std::size_t m1_;
  std::size_t m2_;
  std::array<Interval, 2> se_bounds_{};
  RandomStream rng_;

  AbsorbParams p_;
  std::vector<std::array<double, 2>> theta_;
  std::vector<std::array<double, 2>> z_;
  std::vector<std::array<double, 2>> s_tilde_;
  std::vector<Walk> walks_;
  std::array<Walk, 2> s_walk_{};
};

std::vector<Chain> run_chains(Model model, const BivariateDataset& dataset,
                              const ImputationReport& imputed, const PriorSpec& prior,
                              const SamplerConfig& config, long n_iter) {
  const int n = config.n_chains;
  std::vector<Chain> chains(n);
  std::vector<std::exception_ptr> errors(n);
  std::atomic<int> next{0};
  auto work = [&] {
    for (int c = next++; c < n; c = next++) {
      try {
        chains[c] = ChainRunner(model, dataset, imputed, prior, config, c, n_iter).run();
      } catch (...) {
        errors[c] = std::current_exception();
      }
    }
  };
  const int threads = std::min(worker_threads(config.max_threads), n);
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
  return chains;
}

}  // namespace

std::string_view param_name(Param p) { return kParamNames[static_cast<int>(p)]; }

std::optional<Param> param_from_name(std::string_view name) {
  for (int i = 0; i < kNumParams; ++i) {
    if (kParamNames[i] == name) return static_cast<Param>(i);
  }
  return std::nullopt;
}

std::vector<Param> model_params(Model model) {
  if (model == Model::Nbc) {
    return {Param::mu1, Param::mu2, Param::tau1, Param::tau2, Param::rhoW, Param::rhoB};
  }
  std::vector<Param> all;
  for (int i = 0; i < kNumParams; ++i) all.push_back(static_cast<Param>(i));
  return all;
}

double get_param(const AbsorbParams& p, Param which) {
  switch (which) {
    case Param::mu1: return p.mu1;
    case Param::mu2: return p.mu2;
    case Param::tau1: return p.tau1;
    case Param::tau2: return p.tau2;
    case Param::gamma01: return p.gamma01;
    case Param::gamma11: return p.gamma11;
    case Param::gamma02: return p.gamma02;
    case Param::gamma12: return p.gamma12;
    case Param::rho1: return p.rho1;
    case Param::rho2: return p.rho2;
    case Param::rhoW: return p.rhoW;
    case Param::rhoB: return p.rhoB;
  }
  return 0.0;
}

void set_param(AbsorbParams& p, Param which, double value) {
  switch (which) {
    case Param::mu1: p.mu1 = value; break;
    case Param::mu2: p.mu2 = value; break;
    case Param::tau1: p.tau1 = value; break;
    case Param::tau2: p.tau2 = value; break;
    case Param::gamma01: p.gamma01 = value; break;
    case Param::gamma11: p.gamma11 = value; break;
    case Param::gamma02: p.gamma02 = value; break;
    case Param::gamma12: p.gamma12 = value; break;
    case Param::rho1: p.rho1 = value; break;
    case Param::rho2: p.rho2 = value; break;
    case Param::rhoW: p.rhoW = value; break;
    case Param::rhoB: p.rhoB = value; break;
  }
}

long SamplerConfig::retained_per_chain() const {
  if (thin < 1 || n_iter <= burn_in) return 0;
  return (n_iter - burn_in + thin - 1) / thin;
}

void SamplerConfig::check() const {
  if (n_chains < 1) throw std::invalid_argument("n_chains must be positive");
  if (n_iter < 1) throw std::invalid_argument("n_iter must be positive");
  if (burn_in < 0 || burn_in >= n_iter) throw std::invalid_argument("burn_in must be in [0, n_iter)");
  if (thin < 1) throw std::invalid_argument("thin must be positive");
  if (!(ess_floor > 0.0)) throw std::invalid_argument("ess_floor must be positive");
  if (max_iter_doublings < 0) throw std::invalid_argument("max_iter_doublings must be non-negative");
  if (adapt_window < 1) throw std::invalid_argument("adapt_window must be positive");
  if (!(target_accept > 0.0 && target_accept < 1.0)) {
    throw std::invalid_argument("target_accept must be in (0, 1)");
  }
  if (retained_per_chain() < 100) {
    throw std::invalid_argument("fewer than 100 retained draws per chain");
  }
}

std::size_t PosteriorDraws::total_draws() const {
  std::size_t n = 0;
  for (const auto& c : chains) n += c.size();
  return n;
}

std::vector<double> PosteriorDraws::combined(Param p) const {
  std::vector<double> out;
  out.reserve(total_draws());
  for (const auto& c : chains) {
    const auto& col = c.column(p);
    out.insert(out.end(), col.begin(), col.end());
  }
  return out;
}

std::vector<std::vector<double>> PosteriorDraws::per_chain(Param p) const {
  std::vector<std::vector<double>> out;
  for (const auto& c : chains) out.push_back(c.column(p));
  return out;
}

DiagnosticsReport diagnose(const PosteriorDraws& draws) {
  DiagnosticsReport report;
  report.iterations_used = draws.config.n_iter;
  for (Param p : model_params(draws.model)) {
    auto chains = draws.per_chain(p);
    if (chains.empty() || chains.front().empty()) continue;
    const std::string name(param_name(p));
    const auto ess = effective_sample_size(chains);
    report.ess[name] = ess.ess;
    if (ess.degenerate && !draws.config.fixed.count(p)) {
      report.warnings.push_back(name + ": chain did not move");
    }
    if (chains.size() == 1) {
      const auto& c = chains.front();
      const std::size_t half = c.size() / 2;
      chains = {std::vector<double>(c.begin(), c.begin() + half),
                std::vector<double>(c.end() - half, c.end())};
    }
    report.split_rhat[name] = split_rhat(chains);
  }
  report.converged = true;
  for (const char* name : {"mu1", "mu2"}) {
    if (!(report.ess.at(name) >= draws.config.ess_floor) || !(report.split_rhat.at(name) <= 1.05)) {
      report.converged = false;
    }
  }
  return report;
}

McmcResult run_mcmc(Model model, const BivariateDataset& dataset, const PriorSpec& prior,
                    const SamplerConfig& config) {
  config.check();
  if (dataset.m1 == 0) throw DataError("no study reports both outcomes");
  const auto allowed = model_params(model);
  for (const auto& [param, value] : config.fixed) {
    if (std::find(allowed.begin(), allowed.end(), param) == allowed.end()) {
      throw std::invalid_argument(std::string(param_name(param)) + " is not a parameter of " +
                                  to_string(model));
    }
    if (!std::isfinite(value)) throw std::invalid_argument("fixed values must be finite");
  }
  const PriorSpec resolved = prior.resolved_for(dataset);
  resolved.check();
  const auto imputed = impute_missing_se(dataset);

  McmcResult result;
  result.draws.model = model;
  result.draws.dataset_fingerprint = dataset_fingerprint(dataset);
  SamplerConfig current = config;
  for (int doubling = 0;; ++doubling) {
    result.draws.config = current;
    result.draws.chains = run_chains(model, dataset, imputed, resolved, current, current.n_iter);
    result.diagnostics = diagnose(result.draws);
    result.diagnostics.doublings = doubling;
    const bool enough = result.diagnostics.ess.at("mu1") >= current.ess_floor &&
                        result.diagnostics.ess.at("mu2") >= current.ess_floor;
    if (enough || doubling >= current.max_iter_doublings) break;
    current.n_iter *= 2;
  }
  if (!result.diagnostics.converged) {
    result.diagnostics.warnings.push_back("not converged after " +
                                          std::to_string(result.diagnostics.doublings) +
                                          " doublings of n_iter");
  }
  return result;
}

int worker_threads(int requested_cap) {
  int n = static_cast<int>(std::thread::hardware_concurrency());
  if (n < 1) n = 1;
  if (const char* env = std::getenv("ABSORB_THREADS")) {
    const int cap = std::atoi(env);
    if (cap > 0) n = std::min(n, cap);
  }
  if (requested_cap > 0) n = std::min(n, requested_cap);
  return n;
}

}  // namespace absorb
