#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace ropper {

// Worker cap: RANK_THREADS environment variable when set, otherwise the
// hardware default.
int resolve_worker_count();

struct FitCommandOptions {
  std::string input_path;
  std::string out_dir = ".";
  std::optional<std::string> config_path;
  std::optional<std::string> tau_method;  // "reml" | "nn"
  std::optional<int> order_h;
  bool intercept = false;
  bool standardize = false;  // standardize covariates for nn distances
  std::optional<std::uint64_t> seed;
  bool quiet = false;
};

// Fits a dataset and writes percentiles.csv, coefficients.csv,
// diagnostics.csv into out_dir. Returns a process exit code.
int cmd_fit(const FitCommandOptions& options);

struct SimulateCommandOptions {
  std::string config_path;
  std::string out_dir = ".";
  std::optional<std::string> sweep;  // "key=v1,v2,..."
  bool plot = false;
  int workers = 0;  // 0 = resolve_worker_count()
  bool quiet = false;
};

// Runs a scenario (optionally swept over one config key) and writes
// psel_summary.csv, psel_replicates.csv and, with plot, curves.svg.
int cmd_simulate(const SimulateCommandOptions& options);

struct ValidateCommandOptions {
  std::optional<std::string> json_path;
  std::uint64_t seed = 20240801;
  double d_prime_fault = 0.0;  // test hook, hidden from the CLI surface
  bool quiet = false;
};

// Runs the self-check suites; nonzero exit iff any suite fails.
int cmd_validate(const ValidateCommandOptions& options);

}  // namespace ropper
