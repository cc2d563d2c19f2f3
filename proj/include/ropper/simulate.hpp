#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ropper/pipeline.hpp"
#include "ropper/rng.hpp"
#include "ropper/types.hpp"

namespace ropper {

enum class ScenarioKind { latent_subgroup, nonlinear_four, emulated_education };
enum class ReDist { normal, t3_scaled, exponential, gamma };

std::string scenario_kind_name(ScenarioKind k);
std::string re_dist_name(ReDist d);

struct ScenarioConfig {
  ScenarioKind kind = ScenarioKind::latent_subgroup;
  int K = 50;
  // latent_subgroup: {b0, b1} with b1 the unmodeled subgroup effect.
  // nonlinear_four: {b0,...,b5}.
  // emulated_education: {b0, b_latent, b_cov...} matching the covariate table.
  std::vector<double> beta;
  std::array<double, 7> gamma{1.0, 2.0, 0.5, 1.5, -1.0, 0.75, 3.0};
  double sigma2 = 2.0;
  int n_min = 5;   // unit sizes n_k ~ Unif{n_min,...,n_max}
  int n_max = 50;  // emulated_education forces n_min = 1
  double alpha1 = 0.0;  // random effect vs covariate-surface correlation knob
  double alpha2 = 0.0;  // random effect vs unit-size correlation knob
  ReDist re_dist = ReDist::normal;
  double tau2_true = 1.0;
  int replicates = 1000;
  std::uint64_t seed = 0;
  TauChoice tau_method = TauChoice::reml;
  int risk_order = 1;
  std::optional<std::string> covariate_table_path;  // emulated_education only

  void validate() const;
};

// Per-replicate component streams derived from (master seed, replicate).
// Covariates, unit sizes, random effects, noise, and split draws each come
// from their own stream so that changing one knob leaves the others'
// draws untouched.
class StreamFactory {
 public:
  StreamFactory(std::uint64_t master, std::uint64_t replicate)
      : master_(master), replicate_(replicate) {}
  enum Component : std::uint32_t {
    covariates = 1,
    sizes = 2,
    effects = 3,
    noise = 4,
    split = 5,
    table_covariates = 6,
  };
  Rng stream(Component c) const { return Rng::derive(master_, replicate_, c); }
  std::uint64_t split_seed() const;

 private:
  std::uint64_t master_;
  std::uint64_t replicate_;
};

struct GenOutput {
  Dataset data;
  LatentTruth truth;
  double rho1 = 0.0;  // realized Cor(v, covariate surface)
  double rho2 = 0.0;  // realized Cor(v, n)
};

GenOutput gen_latent_subgroup(const ScenarioConfig& cfg, const StreamFactory& streams);
GenOutput gen_nonlinear_four(const ScenarioConfig& cfg, const StreamFactory& streams);

// Rows of unit-level covariates for the emulated design (no intercept, no
// latent column). The bundled synthetic table is drawn on the fly; a
// user-supplied table is read from CSV by the caller.
struct CovariateTable {
  std::vector<std::string> names;
  MatrixXd values;
};
CovariateTable synthetic_education_covariates(int K, Rng& rng);
GenOutput gen_emulated(const ScenarioConfig& cfg, const CovariateTable& table,
                       const StreamFactory& streams);

// Draw a single centered random effect with variance exactly tau2.
// Non-normal families are shifted to mean zero and rescaled.
double draw_random_effect(ReDist dist, double tau2, Rng& rng);

struct ReplicateRecord {
  int replicate = 0;
  std::map<Method, Losses> losses;
  double rho1 = 0.0;
  double rho2 = 0.0;
  double tau2_hat = 0.0;
};

struct MethodSummary {
  double mean_psel = 0.0;
  double se_psel = 0.0;
  double mean_psel_proper = 0.0;
  double se_psel_proper = 0.0;
  double mean_ppsel = 0.0;
  double se_ppsel = 0.0;
};

struct SimResult {
  ScenarioConfig config;
  std::string version;
  int replicates_done = 0;
  int failures = 0;
  std::vector<std::string> failure_messages;
  std::vector<ReplicateRecord> table;  // successful replicates, ascending order
  std::map<Method, MethodSummary> summary;
  double mean_rho1 = 0.0;
  double mean_rho2 = 0.0;
  double mean_tau2_hat = 0.0;
};

// Runs the full replication loop. Deterministic given (cfg, cfg.seed) for
// any worker count: replicate r always uses streams derived from
// (seed, r) and aggregation runs in replicate order.
SimResult run_scenario(const ScenarioConfig& cfg, int workers = 0);

// Mean and standard error of per-replicate PSEL differences (a minus b).
struct PairedDiff {
  double mean = 0.0;
  double se = 0.0;
};
PairedDiff paired_psel_diff(const SimResult& result, Method a, Method b);

}  // namespace ropper
