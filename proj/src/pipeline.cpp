#include "ropper/pipeline.hpp"

#include <cmath>
#include <stdexcept>

#include "ropper/core_model.hpp"
#include "ropper/loss.hpp"
#include "ropper/risk.hpp"

namespace ropper {

const std::vector<Method>& all_methods() {
  static const std::vector<Method> methods = {Method::ropper, Method::pepp_mle, Method::blup_perc,
                                              Method::residual_perc};
  return methods;
}

std::string method_name(Method m) {
  switch (m) {
    case Method::ropper: return "ropper";
    case Method::pepp_mle: return "pepp_mle";
    case Method::blup_perc: return "blup_perc";
    case Method::residual_perc: return "residual_perc";
  }
  return "?";
}

namespace {

constexpr double kDegenerateTau2 = 1e-10;

std::runtime_error stage_error(const char* stage, const std::exception& e) {
  return std::runtime_error(std::string("fit[") + stage + "]: " + e.what());
}

}  // namespace

FitResult fit(const Dataset& data, const FitOptions& options) {
  data.validate();
  const int K = data.size();
  FitResult out;

  // (1) random-effects scale
  try {
    out.tau = options.tau_method == TauChoice::reml
                  ? reml_estimate(data)
                  : nn_tau_estimate(data, options.nn_seed, options.nn_standardize);
  } catch (const std::exception& e) {
    throw stage_error("tau", e);
  }

  double tau2 = out.tau.tau2;
  if (tau2 < kDegenerateTau2) {
    out.warnings.push_back("estimated tau^2 is effectively zero; percentile estimates collapse to 1/2");
    tau2 = kDegenerateTau2;
  }
  const double tau = std::sqrt(tau2);

  // (2) likelihood-based coefficients
  try {
    out.beta_mle = mle_beta(data, tau);
  } catch (const std::exception& e) {
    throw stage_error("mle", e);
  }

  // (3) ranking-targeted coefficients, warm started at the MLE
  try {
    MMConfig mm = options.mm;
    if (mm.init == MMInit::mle) {
      mm.init = MMInit::custom;
      mm.custom_init = out.beta_mle;
    }
    MMResult res = minimize_qhat(data, tau, mm);
    out.beta_rfure = res.beta;
    out.mm_trace = std::move(res.trace);
    if (options.risk_order >= 2)
      out.beta_rfure = minimize_qhat_order(data, tau, options.risk_order, out.beta_rfure);
  } catch (const std::exception& e) {
    throw stage_error("rfure", e);
  }

  // (4) all four percentile rules with the shared tau
  const WorkingParams params_r{out.beta_rfure, tau};
  const WorkingParams params_mle{out.beta_mle, tau};
  VectorXd raw_r(K), raw_mle(K), resid(K), blup(K);
  for (int k = 0; k < K; ++k) {
    const UnitRecord& unit = data.units[k];
    raw_r(k) = pepp(unit, params_r);
    raw_mle(k) = pepp(unit, params_mle);
    resid(k) = unit.y - unit.x.dot(out.beta_mle);
    blup(k) = shrinkage_factor(unit.sigma, tau) * resid(k);
  }

  out.percentiles[Method::ropper] = {PercentileVector{raw_r, PercKind::raw},
                                     proper_percentiles(raw_r)};
  out.percentiles[Method::pepp_mle] = {PercentileVector{raw_mle, PercKind::raw},
                                       proper_percentiles(raw_mle)};
  out.percentiles[Method::blup_perc] = {std::nullopt, proper_percentiles(blup)};
  out.percentiles[Method::residual_perc] = {std::nullopt, proper_percentiles(resid)};

  out.diagnostics.resize(K);
  for (int k = 0; k < K; ++k) {
    const UnitRecord& unit = data.units[k];
    UnitDiagnostics& d = out.diagnostics[k];
    d.id = unit.id.empty() ? std::to_string(k) : unit.id;
    d.y = unit.y;
    d.sigma = unit.sigma;
    d.fit_mle = unit.x.dot(out.beta_mle);
    d.fit_rfure = unit.x.dot(out.beta_rfure);
    d.b = shrinkage_factor(unit.sigma, tau);
    d.v = ranking_shrink(unit.sigma, tau);
    d.r = raw_r(k);
  }
  return out;
}

std::map<Method, Losses> score(const FitResult& result, const LatentTruth& truth) {
  const auto K = result.diagnostics.size();
  if (static_cast<size_t>(truth.v.size()) != K || static_cast<size_t>(truth.mu.size()) != K)
    throw std::invalid_argument("score: truth length does not match fit");

  const VectorXd target = empirical_percentiles(truth.v).values;
  VectorXd rho(truth.v.size());
  for (int k = 0; k < truth.v.size(); ++k)
    rho(k) = population_percentile(truth.v(k), truth.tau_true);

  std::map<Method, Losses> out;
  for (Method m : all_methods()) {
    const MethodPercentiles& perc = result.percentiles.at(m);
    const VectorXd& canonical = perc.raw ? perc.raw->values : perc.proper.values;
    Losses l;
    l.psel = psel(target, canonical);
    l.psel_proper = psel(target, perc.proper.values);
    l.ppsel = ppsel(rho, canonical);
    out[m] = l;
  }
  return out;
}

}  // namespace ropper
