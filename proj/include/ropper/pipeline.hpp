#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ropper/mm.hpp"
#include "ropper/types.hpp"
#include "ropper/variance.hpp"

namespace ropper {

// The four percentile rules compared throughout: the ranking-targeted fit,
// the same percentile family at the MLE, and the two rank-based baselines.
enum class Method { ropper, pepp_mle, blup_perc, residual_perc };

const std::vector<Method>& all_methods();
std::string method_name(Method m);

enum class TauChoice { reml, nn };

struct FitOptions {
  TauChoice tau_method = TauChoice::reml;
  int risk_order = 1;
  MMConfig mm;
  std::uint64_t nn_seed = 0;
  bool nn_standardize = false;
};

// raw is absent for the rank-based baselines (their natural output already
// is a proper percentile vector).
struct MethodPercentiles {
  std::optional<PercentileVector> raw;
  PercentileVector proper;
};

struct UnitDiagnostics {
  std::string id;
  double y = 0.0;
  double sigma = 0.0;
  double fit_mle = 0.0;    // x'beta_mle
  double fit_rfure = 0.0;  // x'beta_r
  double b = 0.0;
  double v = 0.0;
  double r = 0.0;  // percentile estimate at beta_r
};

struct FitResult {
  TauEstimate tau;
  VectorXd beta_mle;
  VectorXd beta_rfure;
  std::map<Method, MethodPercentiles> percentiles;
  MMTrace mm_trace;
  std::vector<UnitDiagnostics> diagnostics;
  std::vector<std::string> warnings;
};

// Full fit: estimate tau, fit the MLE, minimize the risk from the MLE
// start, then evaluate all four percentile rules with the shared tau.
FitResult fit(const Dataset& data, const FitOptions& options);

struct Losses {
  double psel = 0.0;         // target plug-in per method: raw values for the
                             // percentile-family rules, proper for the baselines
  double psel_proper = 0.0;  // same loss with every rule projected to proper
  double ppsel = 0.0;
};

// Scores every method against the same latent truth, so per-replicate
// method differences are directly comparable.
std::map<Method, Losses> score(const FitResult& result, const LatentTruth& truth);

}  // namespace ropper
