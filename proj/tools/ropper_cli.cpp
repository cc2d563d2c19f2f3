#include <exception>
#include <iostream>

#include <CLI11.hpp>

#include "ropper/commands.hpp"
#include "ropper/version.hpp"

int main(int argc, char** argv) {
  CLI::App app{"ropper: ranking-targeted empirical Bayes percentile estimation"};
  app.set_version_flag("--version", ropper::kVersion);
  app.require_subcommand(1);

  ropper::FitCommandOptions fit_opt;
  std::string fit_config, fit_tau;
  int fit_order = 0;
  std::uint64_t fit_seed = 0;
  auto* fit_cmd = app.add_subcommand("fit", "fit a unit-level CSV and write percentile tables");
  fit_cmd->add_option("input", fit_opt.input_path, "input CSV (columns: id,y,sigma,covariates...,n)")
      ->required()
      ->check(CLI::ExistingFile);
  fit_cmd->add_option("--config", fit_config, "flat key=value config file");
  fit_cmd->add_option("--tau", fit_tau, "tau estimator: reml|nn");
  fit_cmd->add_option("--order-h", fit_order, "risk truncation order H (default 1)");
  fit_cmd->add_flag("--intercept", fit_opt.intercept, "prepend a ones column to the design");
  fit_cmd->add_flag("--standardize", fit_opt.standardize,
                    "standardize covariates for nn split distances");
  auto* fit_seed_opt = fit_cmd->add_option("--seed", fit_seed, "seed for the nn split");
  fit_cmd->add_option("--out", fit_opt.out_dir, "output directory (default .)");

  ropper::SimulateCommandOptions sim_opt;
  std::string sim_sweep;
  auto* sim_cmd = app.add_subcommand("simulate", "run a simulation scenario");
  sim_cmd->add_option("--config", sim_opt.config_path, "scenario config file")
      ->required()
      ->check(CLI::ExistingFile);
  sim_cmd->add_option("--sweep", sim_sweep, "sweep one config key: key=v1,v2,...");
  sim_cmd->add_flag("--plot", sim_opt.plot, "emit curves.svg for the sweep");
  sim_cmd->add_option("--out", sim_opt.out_dir, "output directory (default .)");

  ropper::ValidateCommandOptions val_opt;
  std::string val_json;
  auto* val_cmd = app.add_subcommand("validate", "run the built-in self-check suites");
  val_cmd->add_option("--json", val_json, "write a machine-readable report to this path");
  val_cmd->add_option("--seed", val_opt.seed, "seed for the check suites");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*fit_cmd) {
      if (!fit_config.empty()) fit_opt.config_path = fit_config;
      if (!fit_tau.empty()) fit_opt.tau_method = fit_tau;
      if (fit_order > 0) fit_opt.order_h = fit_order;
      if (fit_seed_opt->count() > 0) fit_opt.seed = fit_seed;
      return ropper::cmd_fit(fit_opt);
    }
    if (*sim_cmd) {
      if (!sim_sweep.empty()) sim_opt.sweep = sim_sweep;
      return ropper::cmd_simulate(sim_opt);
    }
    if (*val_cmd) {
      if (!val_json.empty()) val_opt.json_path = val_json;
      return ropper::cmd_validate(val_opt);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
