#include "ropper/risk.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "ropper/core_model.hpp"
#include "ropper/loss.hpp"
#include "ropper/normal.hpp"

namespace ropper {

namespace {

constexpr double kSqrt2OverPi = 0.79788456080286535588;  // sqrt(2/pi)

// He_j(z) by the three-term recurrence He_{j+1} = z*He_j - j*He_{j-1}.
double hermite_prob(int j, double z) {
  double h0 = 1.0;
  if (j == 0) return h0;
  double h1 = z;
  for (int i = 1; i < j; ++i) {
    const double h2 = z * h1 - i * h0;
    h0 = h1;
    h1 = h2;
  }
  return h1;
}

// log of the positive series coefficient for the (h, j) term:
//   (2h+1)! * (tau^2)^(h-j+1/2) / (2^(h+j) * h! * j! * (2h+1-2j)! * (2h+1))
double log_series_coeff(int h, int j, double tau) {
  return std::lgamma(2 * h + 2.0) - (h + j) * std::log(2.0) - std::lgamma(h + 1.0) -
         std::lgamma(j + 1.0) - std::lgamma(2 * h + 2.0 - 2 * j) - std::log(2.0 * h + 1.0) +
         (2.0 * (h - j) + 1.0) * std::log(tau);
}

void check_order(int order_h) {
  if (order_h < 1 || order_h > kMaxRiskOrder)
    throw std::invalid_argument("risk order H must be in [1, " + std::to_string(kMaxRiskOrder) +
                                "], got " + std::to_string(order_h));
}

}  // namespace

double pairwise_sum(const double* data, int n) {
  if (n <= 0) return 0.0;
  if (n <= 8) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += data[i];
    return s;
  }
  const int half = n / 2;
  return pairwise_sum(data, half) + pairwise_sum(data + half, n - half);
}

double pepp_derivative(const UnitRecord& unit, const WorkingParams& params, int m) {
  if (m < 1) throw std::invalid_argument("pepp_derivative: order m must be >= 1");
  params.validate();
  if (unit.x.size() != params.beta.size())
    throw std::invalid_argument("pepp_derivative: covariate/beta length mismatch");
  const double v = ranking_shrink(unit.sigma, params.tau);
  const double z = v * (unit.y - unit.x.dot(params.beta));
  const double sign = (m - 1) % 2 == 0 ? 1.0 : -1.0;
  return std::pow(v, m) * sign * hermite_prob(m - 1, z) * normal_pdf(z);
}

RiskValue qhat(const Dataset& data, const VectorXd& beta, double tau, const RiskConfig& config) {
  check_order(config.order_h);
  data.validate();
  WorkingParams params{beta, tau};
  params.validate();
  if (data.dim() != beta.size())
    throw std::invalid_argument("qhat: design dimension does not match beta length");

  const int K = data.size();
  VectorXd terms(K);
  for (int k = 0; k < K; ++k) {
    const UnitRecord& unit = data.units[k];
    double series = 0.0;
    for (int h = 0; h < config.order_h; ++h) {
      const double hsign = h % 2 == 0 ? 1.0 : -1.0;
      for (int j = 0; j <= h; ++j) {
        const double coeff = std::exp(log_series_coeff(h, j, tau));
        series += hsign * coeff * pepp_derivative(unit, params, 2 * h - 2 * j + 1);
      }
    }
    const double r = pepp(unit, params);
    terms(k) = -kSqrt2OverPi * series + (r - 0.5) * (r - 0.5);
  }
  RiskValue out;
  out.per_unit_terms = terms;
  out.qhat = 1.0 / 12.0 + pairwise_sum(terms.data(), K) / K;
  return out;
}

double qhat1(const Dataset& data, const VectorXd& beta, double tau) {
  data.validate();
  WorkingParams params{beta, tau};
  params.validate();
  if (data.dim() != beta.size())
    throw std::invalid_argument("qhat1: design dimension does not match beta length");
  const int K = data.size();
  VectorXd terms(K);
  for (int k = 0; k < K; ++k) {
    const UnitRecord& unit = data.units[k];
    const double v = ranking_shrink(unit.sigma, tau);
    const double z = v * (unit.y - unit.x.dot(beta));
    const double d = normal_cdf(z) - 0.5;
    terms(k) = -tau * kSqrt2OverPi * v * normal_pdf(z) + d * d;
  }
  return 1.0 / 12.0 + pairwise_sum(terms.data(), K) / K;
}

VectorXd qhat1_gradient(const Dataset& data, const VectorXd& beta, double tau) {
  data.validate();
  const int K = data.size();
  VectorXd grad = VectorXd::Zero(beta.size());
  for (int k = 0; k < K; ++k) {
    const UnitRecord& unit = data.units[k];
    const double v = ranking_shrink(unit.sigma, tau);
    const double z = v * (unit.y - unit.x.dot(beta));
    const double phi = normal_pdf(z);
    // d/dbeta of the unit term; phi'(z) = -z phi(z).
    const double coef = -tau * kSqrt2OverPi * v * v * z * phi - 2.0 * (normal_cdf(z) - 0.5) * phi * v;
    grad += coef * unit.x;
  }
  return grad / K;
}

VectorXd qhat_gradient(const Dataset& data, const VectorXd& beta, double tau,
                       const RiskConfig& config) {
  check_order(config.order_h);
  data.validate();
  WorkingParams params{beta, tau};
  const int K = data.size();
  VectorXd grad = VectorXd::Zero(beta.size());
  for (int k = 0; k < K; ++k) {
    const UnitRecord& unit = data.units[k];
    double dseries = 0.0;
    for (int h = 0; h < config.order_h; ++h) {
      const double hsign = h % 2 == 0 ? 1.0 : -1.0;
      for (int j = 0; j <= h; ++j) {
        const double coeff = std::exp(log_series_coeff(h, j, tau));
        // d/dbeta of d^m R/dY^m is -x * d^(m+1) R/dY^(m+1).
        dseries -= hsign * coeff * pepp_derivative(unit, params, 2 * h - 2 * j + 2);
      }
    }
    const double r = pepp(unit, params);
    const double v = ranking_shrink(unit.sigma, tau);
    const double z = v * (unit.y - unit.x.dot(beta));
    const double dsquare = -2.0 * (r - 0.5) * normal_pdf(z) * v;
    grad += (-kSqrt2OverPi * dseries + dsquare) * unit.x;
  }
  return grad / K;
}

McEstimate mc_true_risk(const std::function<std::pair<Dataset, LatentTruth>(int)>& generate,
                        const VectorXd& beta, double tau, int reps) {
  if (reps < 100) throw std::invalid_argument("mc_true_risk: need at least 100 replicates");
  std::vector<double> losses(reps);
  for (int r = 0; r < reps; ++r) {
    auto [data, truth] = generate(r);
    const int K = data.size();
    WorkingParams params{beta, tau};
    VectorXd estimates(K), rho(K);
    for (int k = 0; k < K; ++k) {
      estimates(k) = pepp(data.units[k], params);
      rho(k) = population_percentile(truth.v(k), truth.tau_true);
    }
    losses[r] = ppsel(rho, estimates);
  }
  const double mean = pairwise_sum(losses.data(), reps) / reps;
  double ss = 0.0;
  for (double l : losses) ss += (l - mean) * (l - mean);
  McEstimate out;
  out.mean = mean;
  out.se = std::sqrt(ss / (static_cast<double>(reps) - 1.0) / reps);
  return out;
}

}  // namespace ropper
