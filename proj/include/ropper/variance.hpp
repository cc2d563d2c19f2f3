#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "ropper/types.hpp"

namespace ropper {

enum class TauMethod { reml, nn, nn_fell_back_to_reml };

struct TauEstimate {
  double tau2 = 0.0;
  TauMethod method = TauMethod::reml;
  std::optional<double> objective_value;
  bool at_boundary = false;
};

// Restricted-likelihood objective in tau (to minimize):
//   sum log(tau^2 + sigma_k^2) + logdet(X'W^-1 X) + Y'P Y
// with W = diag(tau^2 + sigma_k^2) and P the weighted residual projector.
double reml_objective(const Dataset& data, double tau);

// 1-D minimization of the REML objective over tau in [lo, hi] by Brent's
// method; the bracket is widened once if the minimum lands on the boundary.
// Defaults: lo = 1e-6, hi = 10 * sd(Y).
TauEstimate reml_estimate(const Dataset& data, double lo = 0.0, double hi = 0.0);

// Test half used by the nearest-neighbor estimator: size K/2 for even K,
// (K+1)/2 for odd K, drawn uniformly from the seed. Returned sorted.
std::vector<int> nn_test_split(int K, std::uint64_t seed);

// Split-sample covariate-nearest-neighbor estimate of tau^2:
//   (1/K) sum Y_k^2 - (1/K_T) sum_{k in D} Y_k Y'_k - (1/K_T) sum_{k in D} sigma_k^2
// where D is a random test half (size K/2 for even K, (K+1)/2 for odd) and
// Y'_k comes from the Euclidean nearest neighbor among training covariates
// (ties to the smallest training index). Falls back to REML when the raw
// value is negative. `standardize` rescales covariates to unit sd for the
// distance computation only.
TauEstimate nn_tau_estimate(const Dataset& data, std::uint64_t seed, bool standardize = false);

}  // namespace ropper
