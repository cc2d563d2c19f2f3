#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "ropper/rng.hpp"
#include "ropper/types.hpp"

namespace ropper {

// A dataset drawn from the working model with heteroskedastic standard
// errors; shared by the self-check suites and the test harness.
struct RandomInstance {
  Dataset data;
  double tau = 1.0;
};
RandomInstance random_instance(Rng& rng, int K, int p);

struct SuiteResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct ValidateOptions {
  std::uint64_t seed = 20240801;
  // Fault-injection hook: added to every d_prime value inside the descent
  // suite's bound check, so the failure path itself can be exercised.
  double d_prime_fault = 0.0;
};

// Runs the self-check suites (Monte Carlo moment identity, MM descent and
// curvature bound, rank-projection brute force, derivative finite
// differences). Each suite appears exactly once in the output.
std::vector<SuiteResult> run_validation_suites(const ValidateOptions& options);

std::string validation_report_json(const std::vector<SuiteResult>& results);

// High-order central finite difference of the standard normal CDF slope
// chain, Richardson extrapolated; exposed for reuse by tests.
double central_fd(const std::function<double(double)>& f, double x, int m, double h);
double richardson_fd(const std::function<double(double)>& f, double x, int m, double h0);

}  // namespace ropper
