#pragma once

#include <functional>
#include <utility>

#include "ropper/types.hpp"

namespace ropper {

// Truncation order of the risk series. Terms beyond H = 8 are numerically
// negligible at double precision and the factorial growth makes higher
// orders pointless, so the range is capped.
struct RiskConfig {
  int order_h = 1;
};
constexpr int kMaxRiskOrder = 8;

// qhat = 1/12 + sum(per_unit_terms)/K; the per-unit decomposition is kept
// for triaging pathological units during optimization.
struct RiskValue {
  double qhat = 0.0;
  VectorXd per_unit_terms;
};

// m-th derivative of the posterior expected population percentile with
// respect to the unit's summary statistic:
//   V^m * (-1)^(m-1) * He_{m-1}(V*u) * phi(V*u),  u = y - x'beta,
// with He_j the probabilists' Hermite polynomials.
double pepp_derivative(const UnitRecord& unit, const WorkingParams& params, int m);

// Order-H truncation of the unbiased estimate of the expected
// population-percentile squared error at fixed (beta, tau).
RiskValue qhat(const Dataset& data, const VectorXd& beta, double tau, const RiskConfig& config);

// Closed form of the order-1 truncation.
double qhat1(const Dataset& data, const VectorXd& beta, double tau);

// Analytic gradient of qhat1 in beta.
VectorXd qhat1_gradient(const Dataset& data, const VectorXd& beta, double tau);

// Analytic gradient of the order-H risk in beta.
VectorXd qhat_gradient(const Dataset& data, const VectorXd& beta, double tau,
                       const RiskConfig& config);

struct McEstimate {
  double mean = 0.0;
  double se = 0.0;
};

// Monte Carlo estimate of the true expected loss of the percentile rule
// defined by (beta, tau): mean PPSEL over fresh draws from `generate`,
// plus its standard error. `generate` returns one replicate's data and
// latent truth; rho targets use the truth's own scale.
McEstimate mc_true_risk(const std::function<std::pair<Dataset, LatentTruth>(int)>& generate,
                        const VectorXd& beta, double tau, int reps);

// Fixed-order pairwise reduction; bit-stable regardless of threading.
double pairwise_sum(const double* data, int n);

}  // namespace ropper
