#include "ropper/simulate.hpp"

#include <atomic>
#include <cmath>
#include <stdexcept>
#include <thread>

#include "ropper/csv.hpp"
#include "ropper/risk.hpp"
#include "ropper/version.hpp"

namespace ropper {

std::string scenario_kind_name(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::latent_subgroup: return "latent_subgroup";
    case ScenarioKind::nonlinear_four: return "nonlinear_four";
    case ScenarioKind::emulated_education: return "emulated_education";
  }
  return "?";
}

std::string re_dist_name(ReDist d) {
  switch (d) {
    case ReDist::normal: return "normal";
    case ReDist::t3_scaled: return "t3_scaled";
    case ReDist::exponential: return "exponential";
    case ReDist::gamma: return "gamma";
  }
  return "?";
}

void ScenarioConfig::validate() const {
  if (replicates < 1) throw std::invalid_argument("scenario: replicates must be >= 1");
  if (!(tau2_true > 0.0)) throw std::invalid_argument("scenario: tau2_true must be > 0");
  if (!(sigma2 > 0.0)) throw std::invalid_argument("scenario: sigma2 must be > 0");
  if (K < 2) throw std::invalid_argument("scenario: K must be >= 2");
  if (n_min < 1 || n_max < n_min) throw std::invalid_argument("scenario: bad unit-size range");
  if (risk_order < 1) throw std::invalid_argument("scenario: risk_order must be >= 1");
  switch (kind) {
    case ScenarioKind::latent_subgroup:
      if (beta.size() != 2)
        throw std::invalid_argument("latent_subgroup: beta must have 2 entries (b0, b1)");
      if (alpha1 != 0.0 || alpha2 != 0.0)
        throw std::invalid_argument("latent_subgroup: alpha knobs are not part of this design");
      break;
    case ScenarioKind::nonlinear_four:
      if (beta.size() != 6)
        throw std::invalid_argument("nonlinear_four: beta must have 6 entries (b0..b5)");
      break;
    case ScenarioKind::emulated_education:
      if (beta.size() < 3)
        throw std::invalid_argument("emulated_education: beta must be {b0, b_latent, b_cov...}");
      break;
  }
  if ((alpha1 != 0.0 || alpha2 != 0.0) && re_dist != ReDist::normal)
    throw std::invalid_argument("scenario: correlated random effects require re_dist=normal");
}

std::uint64_t StreamFactory::split_seed() const {
  std::uint64_t sm = master_ ^ (replicate_ * 0x9e3779b97f4a7c15ULL);
  return splitmix64(sm);
}

double draw_random_effect(ReDist dist, double tau2, Rng& rng) {
  if (!(tau2 > 0.0)) throw std::invalid_argument("draw_random_effect: tau2 must be > 0");
  const double tau = std::sqrt(tau2);
  switch (dist) {
    case ReDist::normal:
      return tau * rng.normal();
    case ReDist::t3_scaled:
      // t(3) has variance 3; rescale so Var = tau2 exactly.
      return tau * rng.student_t(3) / std::sqrt(3.0);
    case ReDist::exponential:
      // Exp(mean 1): mean 1, variance 1.
      return tau * (rng.exponential() - 1.0);
    case ReDist::gamma: {
      // shape 2, rate sqrt(2): mean sqrt(2), variance 1.
      const double g = rng.gamma(2.0, std::sqrt(2.0));
      return tau * (g - std::sqrt(2.0));
    }
  }
  throw std::invalid_argument("draw_random_effect: unknown distribution");
}

namespace {

double correlation(const VectorXd& a, const VectorXd& b) {
  const double ma = a.mean(), mb = b.mean();
  const VectorXd ca = a.array() - ma, cb = b.array() - mb;
  const double denom = std::sqrt(ca.squaredNorm() * cb.squaredNorm());
  return denom > 0.0 ? ca.dot(cb) / denom : 0.0;
}

// Draws v given the (already materialized) correlation anchors. surface and
// sizes may be empty when the matching alpha is zero.
VectorXd draw_effects(const ScenarioConfig& cfg, const VectorXd& surface, const VectorXd& sizes,
                      Rng& rng) {
  const int K = cfg.K;
  VectorXd v(K);
  VectorXd shift = VectorXd::Zero(K);
  if (cfg.alpha1 != 0.0) shift += cfg.alpha1 * (surface.array() - surface.mean()).matrix();
  if (cfg.alpha2 != 0.0) shift += cfg.alpha2 * (sizes.array() - sizes.mean()).matrix();
  for (int k = 0; k < K; ++k) v(k) = shift(k) + draw_random_effect(cfg.re_dist, cfg.tau2_true, rng);
  return v;
}

GenOutput assemble(const ScenarioConfig& cfg, const MatrixXd& fit_design, const VectorXd& mu,
                   const VectorXd& surface, const VectorXd& sizes, const VectorXd& v, Rng& noise) {
  const int K = cfg.K;
  GenOutput out;
  out.data.units.resize(K);
  for (int k = 0; k < K; ++k) {
    UnitRecord& u = out.data.units[k];
    const double se = std::sqrt(cfg.sigma2 / sizes(k));
    u.id = "u" + std::to_string(k);
    u.sigma = se;
    u.y = mu(k) + v(k) + se * noise.normal();
    u.x = fit_design.row(k).transpose();
    u.n = static_cast<int>(sizes(k));
  }
  out.truth.v = v;
  out.truth.mu = mu;
  out.truth.tau_true = std::sqrt(cfg.tau2_true);
  out.rho1 = correlation(v, surface);
  out.rho2 = correlation(v, sizes);
  return out;
}

VectorXd draw_sizes(const ScenarioConfig& cfg, const StreamFactory& streams) {
  Rng rng = streams.stream(StreamFactory::sizes);
  const int lo = cfg.kind == ScenarioKind::emulated_education ? 1 : cfg.n_min;
  VectorXd n(cfg.K);
  for (int k = 0; k < cfg.K; ++k) n(k) = rng.uniform_int(lo, cfg.n_max);
  return n;
}

}  // namespace

GenOutput gen_latent_subgroup(const ScenarioConfig& cfg, const StreamFactory& streams) {
  cfg.validate();
  if (cfg.kind != ScenarioKind::latent_subgroup)
    throw std::invalid_argument("gen_latent_subgroup: wrong scenario kind");
  const int K = cfg.K;

  Rng cov = streams.stream(StreamFactory::covariates);
  VectorXd x(K);
  for (int k = 0; k < K; ++k) x(k) = cov.bernoulli(0.5) ? 1.0 : 0.0;
  const VectorXd sizes = draw_sizes(cfg, streams);

  const VectorXd surface = cfg.beta[1] * x;
  const VectorXd mu = (cfg.beta[0] + surface.array()).matrix();

  Rng eff = streams.stream(StreamFactory::effects);
  const VectorXd v = draw_effects(cfg, surface, sizes, eff);

  // The fitted model is deliberately underspecified: intercept only.
  const MatrixXd fit_design = MatrixXd::Ones(K, 1);
  Rng noise = streams.stream(StreamFactory::noise);
  return assemble(cfg, fit_design, mu, surface, sizes, v, noise);
}

GenOutput gen_nonlinear_four(const ScenarioConfig& cfg, const StreamFactory& streams) {
  cfg.validate();
  if (cfg.kind != ScenarioKind::nonlinear_four)
    throw std::invalid_argument("gen_nonlinear_four: wrong scenario kind");
  const int K = cfg.K;
  const auto& b = cfg.beta;
  const auto& g = cfg.gamma;

  Rng cov = streams.stream(StreamFactory::covariates);
  MatrixXd X(K, 4);
  for (int k = 0; k < K; ++k)
    for (int j = 0; j < 4; ++j) X(k, j) = cov.uniform01();
  const VectorXd sizes = draw_sizes(cfg, streams);

  VectorXd surface(K);
  for (int k = 0; k < K; ++k) {
    const double x1 = X(k, 0), x2 = X(k, 1), x3 = X(k, 2), x4 = X(k, 3);
    surface(k) = b[1] * x1 + b[2] * std::pow(x2, g[0]) * std::pow(1.0 - x1, g[1]) +
                 b[3] * std::pow(x3, g[2]) * std::pow(1.0 - x1, g[3]) +
                 b[4] * std::pow(x1, g[4]) * std::pow(1.0 - x2, g[5]) * std::pow(1.0 - x3, g[6]) +
                 b[5] * x4;
  }
  const VectorXd mu = (b[0] + surface.array()).matrix();

  Rng eff = streams.stream(StreamFactory::effects);
  const VectorXd v = draw_effects(cfg, surface, sizes, eff);

  // Misspecified linear working design: intercept plus the raw covariates.
  MatrixXd fit_design(K, 5);
  fit_design.col(0).setOnes();
  fit_design.rightCols(4) = X;
  Rng noise = streams.stream(StreamFactory::noise);
  return assemble(cfg, fit_design, mu, surface, sizes, v, noise);
}

CovariateTable synthetic_education_covariates(int K, Rng& rng) {
  // Synthetic stand-in for school-survey covariates; moments are documented
  // in docs/formats.md. Columns: three locale dummies, a private-school
  // indicator, mean household income, and three staff/parent proportions.
  CovariateTable t;
  t.names = {"suburban", "town", "rural", "private", "income", "grad_prop", "parent1_prop",
             "parent2_prop"};
  t.values.resize(K, 8);
  for (int k = 0; k < K; ++k) {
    const double u = rng.uniform01();
    t.values(k, 0) = (u >= 0.35 && u < 0.65) ? 1.0 : 0.0;
    t.values(k, 1) = (u >= 0.65 && u < 0.80) ? 1.0 : 0.0;
    t.values(k, 2) = u >= 0.80 ? 1.0 : 0.0;
    t.values(k, 3) = rng.bernoulli(0.2) ? 1.0 : 0.0;
    t.values(k, 4) = rng.normal(0.6, 0.2);
    t.values(k, 5) = rng.uniform01();
    t.values(k, 6) = rng.uniform01();
    t.values(k, 7) = rng.uniform01();
  }
  return t;
}

GenOutput gen_emulated(const ScenarioConfig& cfg, const CovariateTable& table,
                       const StreamFactory& streams) {
  cfg.validate();
  if (cfg.kind != ScenarioKind::emulated_education)
    throw std::invalid_argument("gen_emulated: wrong scenario kind");
  const int K = cfg.K;
  const int p_cov = static_cast<int>(table.values.cols());
  if (table.values.rows() < K)
    throw std::invalid_argument("gen_emulated: covariate table has fewer than K rows");
  if (static_cast<int>(cfg.beta.size()) != 2 + p_cov)
    throw std::invalid_argument("gen_emulated: beta length must be 2 + #covariates, got " +
                                std::to_string(cfg.beta.size()) + " for " +
                                std::to_string(p_cov) + " covariates");

  const MatrixXd X = table.values.topRows(K);
  Rng cov = streams.stream(StreamFactory::covariates);
  VectorXd latent(K);
  for (int k = 0; k < K; ++k) latent(k) = cov.bernoulli(0.5) ? 1.0 : 0.0;
  const VectorXd sizes = draw_sizes(cfg, streams);

  VectorXd coef(p_cov);
  for (int j = 0; j < p_cov; ++j) coef(j) = cfg.beta[2 + j];
  const VectorXd surface = X * coef;  // measured-covariate part only
  const VectorXd mu = (cfg.beta[0] + cfg.beta[1] * latent.array() + surface.array()).matrix();

  Rng eff = streams.stream(StreamFactory::effects);
  const VectorXd v = draw_effects(cfg, surface, sizes, eff);

  // The latent column is withheld from the fitted design.
  MatrixXd fit_design(K, 1 + p_cov);
  fit_design.col(0).setOnes();
  fit_design.rightCols(p_cov) = X;
  Rng noise = streams.stream(StreamFactory::noise);
  return assemble(cfg, fit_design, mu, surface, sizes, v, noise);
}

namespace {

GenOutput generate_replicate(const ScenarioConfig& cfg, const CovariateTable* table,
                             std::uint64_t replicate) {
  const StreamFactory streams(cfg.seed, replicate);
  switch (cfg.kind) {
    case ScenarioKind::latent_subgroup: return gen_latent_subgroup(cfg, streams);
    case ScenarioKind::nonlinear_four: return gen_nonlinear_four(cfg, streams);
    case ScenarioKind::emulated_education: {
      if (table) return gen_emulated(cfg, *table, streams);
      Rng table_rng = streams.stream(StreamFactory::table_covariates);
      const CovariateTable synth = synthetic_education_covariates(cfg.K, table_rng);
      return gen_emulated(cfg, synth, streams);
    }
  }
  throw std::invalid_argument("unknown scenario kind");
}

struct Moments {
  double mean = 0.0;
  double se = 0.0;
};

Moments moments(const std::vector<double>& xs) {
  Moments m;
  const int n = static_cast<int>(xs.size());
  if (n == 0) return m;
  m.mean = pairwise_sum(xs.data(), n) / n;
  if (n > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - m.mean) * (x - m.mean);
    m.se = std::sqrt(ss / (n - 1.0) / n);
  }
  return m;
}

}  // namespace

SimResult run_scenario(const ScenarioConfig& cfg, int workers) {
  cfg.validate();
  const int R = cfg.replicates;
  if (workers <= 0) workers = static_cast<int>(std::thread::hardware_concurrency());
  workers = std::max(1, std::min(workers, R));

  std::optional<CovariateTable> user_table;
  if (cfg.kind == ScenarioKind::emulated_education && cfg.covariate_table_path)
    user_table = read_covariate_table(*cfg.covariate_table_path);

  struct Slot {
    bool ok = false;
    ReplicateRecord record;
    std::string error;
  };
  std::vector<Slot> slots(R);

  auto work = [&](int rep) {
    Slot& slot = slots[rep];
    try {
      const GenOutput gen = generate_replicate(cfg, user_table ? &*user_table : nullptr, rep);
      FitOptions opt;
      opt.tau_method = cfg.tau_method;
      opt.risk_order = cfg.risk_order;
      opt.nn_seed = StreamFactory(cfg.seed, rep).split_seed();
      const FitResult fitted = fit(gen.data, opt);
      slot.record.replicate = rep;
      slot.record.losses = score(fitted, gen.truth);
      slot.record.rho1 = gen.rho1;
      slot.record.rho2 = gen.rho2;
      slot.record.tau2_hat = fitted.tau.tau2;
      slot.ok = true;
    } catch (const std::exception& e) {
      slot.error = e.what();
    }
  };

  if (workers == 1) {
    for (int rep = 0; rep < R; ++rep) work(rep);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (int rep = next.fetch_add(1); rep < R; rep = next.fetch_add(1)) work(rep);
      });
    for (auto& th : pool) th.join();
  }

  SimResult out;
  out.config = cfg;
  out.version = kVersion;

  std::map<Method, std::vector<double>> psel_by, psel_proper_by, ppsel_by;
  std::vector<double> rho1s, rho2s, tau2s;
  for (int rep = 0; rep < R; ++rep) {
    const Slot& slot = slots[rep];
    if (!slot.ok) {
      ++out.failures;
      if (out.failure_messages.size() < 20) out.failure_messages.push_back(slot.error);
      continue;
    }
    out.table.push_back(slot.record);
    for (const auto& [m, l] : slot.record.losses) {
      psel_by[m].push_back(l.psel);
      psel_proper_by[m].push_back(l.psel_proper);
      ppsel_by[m].push_back(l.ppsel);
    }
    rho1s.push_back(slot.record.rho1);
    rho2s.push_back(slot.record.rho2);
    tau2s.push_back(slot.record.tau2_hat);
  }
  out.replicates_done = static_cast<int>(out.table.size());

  if (out.failures > 0 && out.failures * 100 > R)
    throw std::runtime_error("run_scenario: " + std::to_string(out.failures) + "/" +
                             std::to_string(R) + " replicates failed (>1%); first error: " +
                             (out.failure_messages.empty() ? "?" : out.failure_messages.front()));

  for (Method m : all_methods()) {
    MethodSummary s;
    const Moments a = moments(psel_by[m]);
    const Moments b = moments(psel_proper_by[m]);
    const Moments c = moments(ppsel_by[m]);
    s.mean_psel = a.mean;
    s.se_psel = a.se;
    s.mean_psel_proper = b.mean;
    s.se_psel_proper = b.se;
    s.mean_ppsel = c.mean;
    s.se_ppsel = c.se;
    out.summary[m] = s;
  }
  out.mean_rho1 = moments(rho1s).mean;
  out.mean_rho2 = moments(rho2s).mean;
  out.mean_tau2_hat = moments(tau2s).mean;
  return out;
}

PairedDiff paired_psel_diff(const SimResult& result, Method a, Method b) {
  std::vector<double> diffs;
  diffs.reserve(result.table.size());
  for (const auto& rec : result.table)
    diffs.push_back(rec.losses.at(a).psel - rec.losses.at(b).psel);
  const Moments m = moments(diffs);
  return {m.mean, m.se};
}

}  // namespace ropper
