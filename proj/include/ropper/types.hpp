#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

namespace ropper {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// One cluster's summary statistic, its (known) standard error, and the
// unit-level covariates. `n` is the unit size; it is only consulted by
// data generators and diagnostics, never by the estimators themselves.
struct UnitRecord {
  std::string id;
  double y = 0.0;
  double sigma = 0.0;
  VectorXd x;
  std::optional<int> n;
};

struct Dataset {
  std::vector<UnitRecord> units;

  int size() const { return static_cast<int>(units.size()); }
  int dim() const { return units.empty() ? 0 : static_cast<int>(units.front().x.size()); }

  MatrixXd design_matrix() const;
  VectorXd y_vector() const;
  VectorXd sigma_vector() const;

  // Throws std::invalid_argument on empty data, mixed covariate lengths,
  // negative/non-finite sigma, or non-finite y.
  void validate() const;
};

// Coefficients of the covariate adjustment and the random-effect standard
// deviation. tau must be strictly positive.
struct WorkingParams {
  VectorXd beta;
  double tau = 1.0;

  void validate() const;
};

// b is the posterior-mean shrinkage weight in [0,1]; v is the percentile
// shrinkage scale in [0, 1/tau], with v = 1/tau exactly when sigma = 0.
struct ShrinkageFactors {
  double b = 0.0;
  double v = 0.0;
};

enum class PercKind { raw, proper };

// raw: values lie in the open interval (0,1).
// proper: values are a permutation of {1/(K+1), ..., K/(K+1)} (ties can
// repeat entries for the empirical-percentile rule).
struct PercentileVector {
  VectorXd values;
  PercKind kind = PercKind::raw;
};

// Simulated ground truth kept by the harness for loss scoring: the random
// effects, the fixed unit means, and the generating scale.
struct LatentTruth {
  VectorXd v;
  VectorXd mu;
  double tau_true = 1.0;
};

}  // namespace ropper
