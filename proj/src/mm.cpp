#include "ropper/mm.hpp"

#include <cassert>
#include <cmath>
#include <stdexcept>

#include "ropper/core_model.hpp"
#include "ropper/normal.hpp"
#include "ropper/risk.hpp"
#include "ropper/rng.hpp"

namespace ropper {

namespace {
constexpr double kSqrtPiOverSqrt2 = 1.25331413731550025121;  // sqrt(pi)/sqrt(2)
}

double d_fun(double u) { return normal_cdf(u) - 0.5; }

double d_small(double u) {
  const double D = d_fun(u);
  return 2.0 * normal_pdf(u) * D / (1.0 - D * D);
}

double d_prime(double u) {
  const double D = d_fun(u);
  const double phi = normal_pdf(u);
  const double om = 1.0 - D * D;
  return 2.0 * phi * (phi * (1.0 + D * D) / (om * om) - u * D / om);
}

MMWeights mm_weights(const Dataset& data, const VectorXd& beta, double tau) {
  data.validate();
  if (!(tau > 0.0)) throw std::invalid_argument("mm_weights: tau must be > 0");
  if (data.dim() != beta.size())
    throw std::invalid_argument("mm_weights: design dimension does not match beta length");
  const int K = data.size();
  MMWeights w;
  w.w1.resize(K);
  w.w2.resize(K);
  w.d.resize(K);
  for (int k = 0; k < K; ++k) {
    const UnitRecord& unit = data.units[k];
    const double v = ranking_shrink(unit.sigma, tau);
    const double z = v * (unit.y - unit.x.dot(beta));
    const double D = d_fun(z);
    w.w1(k) = v * normal_pdf(z);
    w.w2(k) = (kSqrtPiOverSqrt2 / tau) * (1.0 - D * D);
    w.d(k) = d_small(z);
  }
  const double total = w.w1.sum() + w.w2.sum();
  // w2_k >= (sqrt(pi)/(tau sqrt(2))) * 3/4 > 0, so the total cannot vanish.
  assert(total > 0.0);
  w.w1 /= total;
  w.w2 /= total;
  return w;
}

VectorXd mm_step(const Dataset& data, const VectorXd& beta, double tau) {
  const MMWeights w = mm_weights(data, beta, tau);
  const int K = data.size();
  const int p = data.dim();
  MatrixXd lhs = MatrixXd::Zero(p, p);
  VectorXd rhs = VectorXd::Zero(p);
  for (int k = 0; k < K; ++k) {
    const UnitRecord& unit = data.units[k];
    const double v = ranking_shrink(unit.sigma, tau);
    const double vxb = v * unit.x.dot(beta);
    const double wk = w.w1(k) + w.w2(k) / 3.0;
    lhs.noalias() += wk * v * v * unit.x * unit.x.transpose();
    rhs += v * (w.w1(k) * v * unit.y + w.w2(k) * (w.d(k) + vxb / 3.0)) * unit.x;
  }
  Eigen::LDLT<MatrixXd> solver(lhs);
  if (solver.info() != Eigen::Success || !solver.isPositive()) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(lhs);
    throw std::runtime_error("mm_step: singular weighted system (min eigenvalue " +
                             std::to_string(es.eigenvalues().minCoeff()) + ")");
  }
  return solver.solve(rhs);
}

namespace {

MMResult run_mm_from(const Dataset& data, double tau, const VectorXd& init, const MMConfig& config) {
  MMResult result;
  VectorXd beta = init;
  double q = qhat1(data, beta, tau);
  result.trace.iterates.emplace_back(beta, q);
  for (int t = 0; t < config.max_iter; ++t) {
    const VectorXd next = mm_step(data, beta, tau);
    const double q_next = qhat1(data, next, tau);
    const double step = (next - beta).lpNorm<Eigen::Infinity>();
    const double decrease = q - q_next;
    beta = next;
    q = q_next;
    result.trace.iterates.emplace_back(beta, q);
    if (step < config.tol_beta) {
      result.trace.converged = true;
      result.trace.reason = MMStopReason::beta_tol;
      break;
    }
    if (decrease < config.tol_q) {
      result.trace.converged = true;
      result.trace.reason = MMStopReason::q_tol;
      break;
    }
  }
  if (!result.trace.converged) result.trace.reason = MMStopReason::max_iter;
  result.beta = beta;
  return result;
}

}  // namespace

MMResult minimize_qhat(const Dataset& data, double tau, const MMConfig& config) {
  data.validate();
  if (!(config.tol_beta > 0.0) || !(config.tol_q > 0.0) || config.max_iter < 1)
    throw std::invalid_argument("minimize_qhat: invalid convergence configuration");
  const int p = data.dim();

  VectorXd init;
  switch (config.init) {
    case MMInit::mle:
      init = mle_beta(data, tau);
      break;
    case MMInit::zeros:
      init = VectorXd::Zero(p);
      break;
    case MMInit::custom:
      if (config.custom_init.size() != p)
        throw std::invalid_argument("minimize_qhat: custom init has wrong length");
      init = config.custom_init;
      break;
  }

  MMResult best = run_mm_from(data, tau, init, config);
  if (config.multistart > 0) {
    Rng rng = Rng::derive(config.multistart_seed, 0x6d6d5f6d73ULL);
    const double scale = init.norm() > 0.0 ? init.norm() : 1.0;
    for (int s = 0; s < config.multistart; ++s) {
      VectorXd perturbed = init;
      for (int j = 0; j < p; ++j) perturbed(j) += rng.normal(0.0, 0.5 * scale);
      MMResult cand = run_mm_from(data, tau, perturbed, config);
      if (cand.trace.iterates.back().second < best.trace.iterates.back().second) best = cand;
    }
  }
  return best;
}

VectorXd minimize_qhat_order(const Dataset& data, double tau, int order_h, const VectorXd& start) {
  if (order_h < 2) return start;
  RiskConfig cfg{order_h};
  VectorXd beta = start;
  double q = qhat(data, beta, tau, cfg).qhat;
  for (int iter = 0; iter < 200; ++iter) {
    const VectorXd g = qhat_gradient(data, beta, tau, cfg);
    const double gnorm = g.norm();
    if (gnorm < 1e-10) break;
    double step = 1.0;
    bool improved = false;
    for (int ls = 0; ls < 40; ++ls) {
      const VectorXd cand = beta - step * g;
      const double q_cand = qhat(data, cand, tau, cfg).qhat;
      if (q_cand < q - 1e-4 * step * gnorm * gnorm) {
        beta = cand;
        q = q_cand;
        improved = true;
        break;
      }
      step *= 0.5;
    }
    if (!improved) break;
  }
  return beta;
}

}  // namespace ropper
