#include "ropper/variance.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <vector>

#include "ropper/core_model.hpp"
#include "ropper/rng.hpp"

namespace ropper {

double reml_objective(const Dataset& data, double tau) {
  data.validate();
  if (!(tau > 0.0)) throw std::invalid_argument("reml_objective: tau must be > 0");
  const int K = data.size();
  const int p = data.dim();
  if (K <= p) throw std::invalid_argument("reml_objective: need K > p");

  const MatrixXd X = data.design_matrix();
  const VectorXd y = data.y_vector();
  const VectorXd s = data.sigma_vector();
  const VectorXd wdiag = tau * tau + s.array().square().matrix().array();

  double logdet_w = 0.0;
  for (int k = 0; k < K; ++k) logdet_w += std::log(wdiag(k));

  const VectorXd winv = wdiag.cwiseInverse();
  const MatrixXd Xw = winv.asDiagonal() * X;
  const MatrixXd qmat = X.transpose() * Xw;  // X' W^-1 X
  Eigen::LLT<MatrixXd> llt(qmat);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("reml_objective: X'W^-1X is singular");
  double logdet_q = 0.0;
  const MatrixXd L = llt.matrixL();
  for (int j = 0; j < p; ++j) logdet_q += 2.0 * std::log(L(j, j));

  // Y'PY = Y'W^-1 Y - (X'W^-1 Y)' (X'W^-1 X)^-1 (X'W^-1 Y)
  const VectorXd xwy = Xw.transpose() * y;
  const double ypy = y.dot(winv.asDiagonal() * y) - xwy.dot(llt.solve(xwy));

  return logdet_w + logdet_q + ypy;
}

namespace {

// Brent minimization on [a, b]; returns argmin.
double brent_min(const std::function<double(double)>& f, double a, double b, double rel_tol) {
  const double golden = 0.3819660112501051;
  double x = a + golden * (b - a);
  double w = x, v = x;
  double fx = f(x), fw = fx, fv = fx;
  double d = 0.0, e = 0.0;
  for (int iter = 0; iter < 200; ++iter) {
    const double m = 0.5 * (a + b);
    const double tol = rel_tol * std::fabs(x) + 1e-12;
    if (std::fabs(x - m) <= 2.0 * tol - 0.5 * (b - a)) break;
    double p = 0.0, q = 0.0, r = 0.0;
    bool parabolic = false;
    if (std::fabs(e) > tol) {
      r = (x - w) * (fx - fv);
      q = (x - v) * (fx - fw);
      p = (x - v) * q - (x - w) * r;
      q = 2.0 * (q - r);
      if (q > 0.0) p = -p;
      q = std::fabs(q);
      const double e_old = e;
      e = d;
      if (std::fabs(p) < std::fabs(0.5 * q * e_old) && p > q * (a - x) && p < q * (b - x)) {
        d = p / q;
        const double u = x + d;
        if (u - a < 2.0 * tol || b - u < 2.0 * tol) d = x < m ? tol : -tol;
        parabolic = true;
      }
    }
    if (!parabolic) {
      e = (x < m ? b : a) - x;
      d = golden * e;
    }
    const double u = x + (std::fabs(d) >= tol ? d : (d > 0.0 ? tol : -tol));
    const double fu = f(u);
    if (fu <= fx) {
      if (u < x) b = x; else a = x;
      v = w; fv = fw;
      w = x; fw = fx;
      x = u; fx = fu;
    } else {
      if (u < x) a = u; else b = u;
      if (fu <= fw || w == x) {
        v = w; fv = fw;
        w = u; fw = fu;
      } else if (fu <= fv || v == x || v == w) {
        v = u; fv = fu;
      }
    }
  }
  return x;
}

}  // namespace

TauEstimate reml_estimate(const Dataset& data, double lo, double hi) {
  data.validate();
  const VectorXd y = data.y_vector();
  const int K = data.size();
  if (lo <= 0.0) lo = 1e-6;
  if (hi <= 0.0) {
    const double sd = K > 1 ? std::sqrt((y.array() - y.mean()).square().sum() / (K - 1)) : 1.0;
    hi = 10.0 * std::max(sd, 1e-3);
  }
  if (!(lo < hi)) throw std::invalid_argument("reml_estimate: need lo < hi");

  auto obj = [&](double tau) { return reml_objective(data, tau); };
  if (!std::isfinite(obj(lo)) || !std::isfinite(obj(hi)))
    throw std::runtime_error("reml_estimate: objective non-finite across bracket");

  // Coarse global scan first: the profile can be near-flat or carry two
  // shallow local minima at small K, and Brent alone only localizes one.
  auto scan_then_refine = [&](double a, double b) {
    const int n = 256;
    int best = 0;
    double best_obj = std::numeric_limits<double>::infinity();
    for (int i = 0; i <= n; ++i) {
      const double t = a + (b - a) * i / n;
      const double o = obj(t);
      if (o < best_obj) {
        best_obj = o;
        best = i;
      }
    }
    const double left = a + (b - a) * std::max(0, best - 1) / n;
    const double right = a + (b - a) * std::min(n, best + 1) / n;
    return brent_min(obj, left, right, 1e-10);
  };

  double tau_hat = scan_then_refine(lo, hi);
  const double width = hi - lo;
  bool at_boundary = tau_hat - lo < 1e-3 * width || hi - tau_hat < 1e-3 * width;
  if (at_boundary && hi - tau_hat < 1e-3 * width) {
    // Widen the bracket once if the minimum hit the upper end.
    tau_hat = scan_then_refine(lo, 10.0 * hi);
    at_boundary = 10.0 * hi - tau_hat < 1e-2 * hi;
  }

  TauEstimate est;
  est.tau2 = tau_hat * tau_hat;
  est.method = TauMethod::reml;
  est.objective_value = obj(tau_hat);
  est.at_boundary = at_boundary;
  return est;
}

std::vector<int> nn_test_split(int K, std::uint64_t seed) {
  const int test_size = K % 2 == 0 ? K / 2 : (K + 1) / 2;
  Rng rng = Rng::derive(seed, 0x6e6e5f73706c6974ULL);
  std::vector<int> test = rng.sample_indices(K, test_size);
  std::sort(test.begin(), test.end());
  return test;
}

TauEstimate nn_tau_estimate(const Dataset& data, std::uint64_t seed, bool standardize) {
  data.validate();
  const int K = data.size();
  if (K < 4) throw std::invalid_argument("nn_tau_estimate: need K >= 4");
  const int p = data.dim();

  // Distances optionally use per-column standardized covariates.
  MatrixXd X = data.design_matrix();
  if (standardize) {
    for (int j = 0; j < p; ++j) {
      const double mean = X.col(j).mean();
      const double sd = std::sqrt((X.col(j).array() - mean).square().sum() / std::max(K - 1, 1));
      if (sd > 0.0) X.col(j) = (X.col(j).array() - mean) / sd;
    }
  }

  const std::vector<int> test = nn_test_split(K, seed);
  const int test_size = static_cast<int>(test.size());
  std::vector<bool> in_test(K, false);
  for (int k : test) in_test[k] = true;
  std::vector<int> train;
  train.reserve(K - test_size);
  for (int k = 0; k < K; ++k)
    if (!in_test[k]) train.push_back(k);

  double sum_y2 = 0.0;
  for (int k = 0; k < K; ++k) sum_y2 += data.units[k].y * data.units[k].y;

  double cross = 0.0, sig2 = 0.0;
  for (int k : test) {
    double best_dist = std::numeric_limits<double>::infinity();
    int best_j = -1;
    for (int j : train) {  // train is index-sorted, so ties keep the smallest index
      const double dist = (X.row(j) - X.row(k)).squaredNorm();
      if (dist < best_dist) {
        best_dist = dist;
        best_j = j;
      }
    }
    cross += data.units[k].y * data.units[best_j].y;
    sig2 += data.units[k].sigma * data.units[k].sigma;
  }

  const double raw = sum_y2 / K - cross / test_size - sig2 / test_size;
  if (raw < 0.0) {
    TauEstimate est = reml_estimate(data);
    est.method = TauMethod::nn_fell_back_to_reml;
    return est;
  }
  TauEstimate est;
  est.tau2 = raw;
  est.method = TauMethod::nn;
  return est;
}

}  // namespace ropper
