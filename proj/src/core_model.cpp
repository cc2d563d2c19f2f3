#include "ropper/core_model.hpp"

#include <cmath>
#include <iostream>
#include <sstream>
#include <stdexcept>

#include "ropper/normal.hpp"

namespace ropper {

MatrixXd Dataset::design_matrix() const {
  MatrixXd X(size(), dim());
  for (int k = 0; k < size(); ++k) X.row(k) = units[k].x.transpose();
  return X;
}

VectorXd Dataset::y_vector() const {
  VectorXd y(size());
  for (int k = 0; k < size(); ++k) y(k) = units[k].y;
  return y;
}

VectorXd Dataset::sigma_vector() const {
  VectorXd s(size());
  for (int k = 0; k < size(); ++k) s(k) = units[k].sigma;
  return s;
}

void Dataset::validate() const {
  if (units.empty()) throw std::invalid_argument("Dataset: no units");
  const int p = dim();
  for (int k = 0; k < size(); ++k) {
    const UnitRecord& u = units[k];
    if (static_cast<int>(u.x.size()) != p)
      throw std::invalid_argument("Dataset: unit " + std::to_string(k) +
                                  " has covariate length " + std::to_string(u.x.size()) +
                                  ", expected " + std::to_string(p));
    if (!std::isfinite(u.y))
      throw std::invalid_argument("Dataset: unit " + std::to_string(k) + " has non-finite y");
    if (!(u.sigma >= 0.0) || !std::isfinite(u.sigma))
      throw std::invalid_argument("Dataset: unit " + std::to_string(k) +
                                  " has invalid sigma (must be finite and >= 0)");
  }
}

void WorkingParams::validate() const {
  if (!(tau > 0.0) || !std::isfinite(tau))
    throw std::invalid_argument("WorkingParams: tau must be strictly positive and finite");
  if (!beta.allFinite()) throw std::invalid_argument("WorkingParams: beta must be finite");
}

double shrinkage_factor(double sigma, double tau) {
  if (!(tau > 0.0)) throw std::invalid_argument("shrinkage_factor: tau must be > 0");
  if (!(sigma >= 0.0) || !std::isfinite(sigma))
    throw std::invalid_argument("shrinkage_factor: sigma must be finite and >= 0");
  const double t2 = tau * tau;
  return t2 / (t2 + sigma * sigma);
}

double ranking_shrink(double sigma, double tau) {
  const double b = shrinkage_factor(sigma, tau);
  return std::sqrt(b / (2.0 * sigma * sigma + tau * tau));
}

ShrinkageFactors shrinkage(double sigma, double tau) {
  return {shrinkage_factor(sigma, tau), ranking_shrink(sigma, tau)};
}

static double residual(const UnitRecord& unit, const WorkingParams& params) {
  params.validate();
  if (unit.x.size() != params.beta.size())
    throw std::invalid_argument("unit covariate length " + std::to_string(unit.x.size()) +
                                " does not match beta length " + std::to_string(params.beta.size()));
  return unit.y - unit.x.dot(params.beta);
}

double best_predictor(const UnitRecord& unit, const WorkingParams& params) {
  return shrinkage_factor(unit.sigma, params.tau) * residual(unit, params);
}

double pepp(const UnitRecord& unit, const WorkingParams& params) {
  return normal_cdf(ranking_shrink(unit.sigma, params.tau) * residual(unit, params));
}

double pepp_individual(double ybar, const VectorXd& xbar, int n, double sigma2,
                       const WorkingParams& params) {
  if (n < 1) throw std::invalid_argument("pepp_individual: n must be >= 1");
  if (!(sigma2 > 0.0) || !std::isfinite(sigma2))
    throw std::invalid_argument("pepp_individual: sigma2 must be finite and > 0");
  UnitRecord summary;
  summary.y = ybar;
  summary.x = xbar;
  summary.sigma = std::sqrt(sigma2 / n);
  return pepp(summary, params);
}

VectorXd mle_beta(const Dataset& data, double tau) {
  data.validate();
  if (!(tau > 0.0)) throw std::invalid_argument("mle_beta: tau must be > 0");
  const int K = data.size();
  const int p = data.dim();
  if (K <= p)
    throw std::invalid_argument("mle_beta: need more units than covariates (K=" +
                                std::to_string(K) + ", p=" + std::to_string(p) + ")");

  const MatrixXd X = data.design_matrix();
  const VectorXd y = data.y_vector();
  const VectorXd s = data.sigma_vector();
  const VectorXd w = (tau * tau + s.array().square()).inverse().matrix();

  const MatrixXd Xw = w.asDiagonal() * X;
  const MatrixXd A = X.transpose() * Xw;  // p x p normal-equations matrix
  const VectorXd b = Xw.transpose() * y;

  // Rank check via column-pivoted QR of the weighted design.
  Eigen::ColPivHouseholderQR<MatrixXd> qr(w.array().sqrt().matrix().asDiagonal() * X);
  qr.setThreshold(1e-10);
  if (qr.rank() < p) {
    std::ostringstream oss;
    oss << "mle_beta: design matrix is rank-deficient (rank " << qr.rank() << " < " << p
        << "); dependent columns:";
    const auto perm = qr.colsPermutation().indices();
    for (int j = qr.rank(); j < p; ++j) oss << " " << perm(j);
    throw std::invalid_argument(oss.str());
  }

  Eigen::SelfAdjointEigenSolver<MatrixXd> es(A);
  const double emin = es.eigenvalues().minCoeff();
  const double emax = es.eigenvalues().maxCoeff();
  if (emin <= 0.0 || emax / emin > 1e10)
    std::cerr << "[ropper] warning: GLS normal equations ill-conditioned (cond ~ "
              << (emin > 0.0 ? emax / emin : std::numeric_limits<double>::infinity()) << ")\n";

  return A.ldlt().solve(b);
}

}  // namespace ropper
