#pragma once

#include "ropper/types.hpp"

namespace ropper {

// Posterior-mean shrinkage weight tau^2/(tau^2 + sigma^2).
double shrinkage_factor(double sigma, double tau);

// Percentile shrinkage scale sqrt(B/(2*sigma^2 + tau^2)); lies in [0, 1/tau].
double ranking_shrink(double sigma, double tau);

ShrinkageFactors shrinkage(double sigma, double tau);

// Posterior mean of the unit's random effect: B * (y - x'beta).
double best_predictor(const UnitRecord& unit, const WorkingParams& params);

// Posterior expected population percentile Phi(V * (y - x'beta)),
// strictly increasing in y for fixed covariates and parameters.
double pepp(const UnitRecord& unit, const WorkingParams& params);

// Individual-level-data variant: reduces to pepp with the summary-level
// sampling variance replaced by sigma2/n.
double pepp_individual(double ybar, const VectorXd& xbar, int n, double sigma2,
                       const WorkingParams& params);

// GLS fit of the coefficients under the working model:
// beta = (X' W^-1 X)^-1 X' W^-1 Y with W = diag(tau^2 + sigma_k^2).
// Throws on rank-deficient designs, naming the offending columns.
VectorXd mle_beta(const Dataset& data, double tau);

}  // namespace ropper
