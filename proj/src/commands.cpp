#include "ropper/commands.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>
#include <vector>

#include "ropper/config.hpp"
#include "ropper/csv.hpp"
#include "ropper/pipeline.hpp"
#include "ropper/simulate.hpp"
#include "ropper/svg.hpp"
#include "ropper/validate.hpp"
#include "ropper/version.hpp"

namespace ropper {

namespace fs = std::filesystem;

int resolve_worker_count() {
  if (const char* env = std::getenv("RANK_THREADS")) {
    const int n = std::atoi(env);
    if (n >= 1) return n;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw ? static_cast<int>(hw) : 1;
}

namespace {

std::string tau_method_name(TauChoice c) { return c == TauChoice::reml ? "reml" : "nn"; }

TauChoice parse_tau_method(const std::string& s) {
  if (s == "reml") return TauChoice::reml;
  if (s == "nn") return TauChoice::nn;
  throw std::invalid_argument("tau method must be 'reml' or 'nn', got '" + s + "'");
}

std::vector<double> parse_double_list(const std::string& s, const std::string& what) {
  std::vector<double> out;
  std::istringstream in(s);
  std::string tok;
  while (std::getline(in, tok, ',')) {
    try {
      size_t pos = 0;
      out.push_back(std::stod(tok, &pos));
      if (pos != tok.size()) throw std::invalid_argument("");
    } catch (...) {
      throw std::invalid_argument(what + ": cannot parse number '" + tok + "'");
    }
  }
  if (out.empty()) throw std::invalid_argument(what + ": empty list");
  return out;
}

void add_common_provenance(CsvWriter& w, const std::vector<std::pair<std::string, std::string>>& kv) {
  w.add_provenance("version", kVersion);
  for (const auto& [k, v] : kv) w.add_provenance(k, v);
}

MMConfig mm_from_config(ConfigReader& cfg) {
  MMConfig mm;
  mm.max_iter = cfg.get_int("mm.max_iter", mm.max_iter);
  mm.tol_beta = cfg.get_double("mm.tol_beta", mm.tol_beta);
  mm.tol_q = cfg.get_double("mm.tol_q", mm.tol_q);
  mm.multistart = cfg.get_int("mm.multistart", mm.multistart);
  mm.multistart_seed = cfg.get_u64("mm.multistart_seed", mm.multistart_seed);
  return mm;
}

}  // namespace

int cmd_fit(const FitCommandOptions& options) {
  ConfigReader cfg;
  if (options.config_path) cfg = ConfigReader::from_file(*options.config_path);

  FitOptions fit_opt;
  fit_opt.mm = mm_from_config(cfg);
  fit_opt.tau_method = parse_tau_method(
      options.tau_method.value_or(cfg.get_string("tau.method", "reml")));
  fit_opt.risk_order = options.order_h.value_or(cfg.get_int("risk.order_h", 1));
  fit_opt.nn_seed = options.seed.value_or(cfg.get_u64("seed", 0));
  fit_opt.nn_standardize = options.standardize || cfg.get_bool("nn.standardize", false);
  const bool intercept = options.intercept || cfg.get_bool("fit.intercept", false);
  cfg.reject_unknown();

  const Dataset data = read_dataset_csv(options.input_path, intercept);
  const std::uint64_t input_hash = fnv1a_file_hash(options.input_path);
  const FitResult result = fit(data, fit_opt);

  const std::vector<std::pair<std::string, std::string>> prov = {
      {"input", options.input_path},
      {"input_fnv1a", std::to_string(input_hash)},
      {"seed", std::to_string(fit_opt.nn_seed)},
      {"tau.method", tau_method_name(fit_opt.tau_method)},
      {"risk.order_h", std::to_string(fit_opt.risk_order)},
      {"fit.intercept", intercept ? "true" : "false"},
      {"nn.standardize", fit_opt.nn_standardize ? "true" : "false"},
      {"mm.max_iter", std::to_string(fit_opt.mm.max_iter)},
      {"mm.tol_beta", format_double(fit_opt.mm.tol_beta)},
      {"mm.tol_q", format_double(fit_opt.mm.tol_q)},
      {"mm.multistart", std::to_string(fit_opt.mm.multistart)},
      {"tau2_hat", format_double(result.tau.tau2)},
      {"tau_estimator_used", result.tau.method == TauMethod::reml ? "reml"
       : result.tau.method == TauMethod::nn                       ? "nn"
                                                                  : "nn_fell_back_to_reml"},
  };

  fs::create_directories(options.out_dir);

  {
    CsvWriter w((fs::path(options.out_dir) / "percentiles.csv").string());
    add_common_provenance(w, prov);
    w.set_header({"id", "ropper_raw", "ropper_proper", "pepp_mle_raw", "pepp_mle_proper",
                  "blup_perc_proper", "residual_perc_proper"});
    const auto& ropper_p = result.percentiles.at(Method::ropper);
    const auto& mle_p = result.percentiles.at(Method::pepp_mle);
    const auto& blup_p = result.percentiles.at(Method::blup_perc);
    const auto& resid_p = result.percentiles.at(Method::residual_perc);
    for (int k = 0; k < data.size(); ++k) {
      w.add_row({result.diagnostics[k].id, CsvWriter::cell(ropper_p.raw->values(k)),
                 CsvWriter::cell(ropper_p.proper.values(k)), CsvWriter::cell(mle_p.raw->values(k)),
                 CsvWriter::cell(mle_p.proper.values(k)), CsvWriter::cell(blup_p.proper.values(k)),
                 CsvWriter::cell(resid_p.proper.values(k))});
    }
    w.write();
  }

  {
    CsvWriter w((fs::path(options.out_dir) / "coefficients.csv").string());
    add_common_provenance(w, prov);
    w.set_header({"term", "beta_mle", "beta_rfure"});
    for (int j = 0; j < result.beta_mle.size(); ++j)
      w.add_row({"x" + std::to_string(j), CsvWriter::cell(result.beta_mle(j)),
                 CsvWriter::cell(result.beta_rfure(j))});
    w.write();
  }

  {
    CsvWriter w((fs::path(options.out_dir) / "diagnostics.csv").string());
    add_common_provenance(w, prov);
    w.set_header({"id", "y", "sigma", "fit_mle", "fit_rfure", "shrink_b", "shrink_v",
                  "percentile_rfure"});
    for (const auto& d : result.diagnostics)
      w.add_row({d.id, CsvWriter::cell(d.y), CsvWriter::cell(d.sigma), CsvWriter::cell(d.fit_mle),
                 CsvWriter::cell(d.fit_rfure), CsvWriter::cell(d.b), CsvWriter::cell(d.v),
                 CsvWriter::cell(d.r)});
    w.write();
  }

  if (!options.quiet) {
    std::cout << "fit: version " << kVersion << ", input " << options.input_path << " (fnv1a "
              << input_hash << "), seed " << fit_opt.nn_seed << ", K=" << data.size()
              << ", p=" << data.dim() << ", tau2_hat=" << format_double(result.tau.tau2) << "\n";
    for (const auto& wmsg : result.warnings) std::cout << "warning: " << wmsg << "\n";
    std::cout << "wrote percentiles.csv, coefficients.csv, diagnostics.csv to " << options.out_dir
              << "\n";
  }
  return 0;
}

namespace {

ScenarioConfig scenario_from_config(ConfigReader& cfg) {
  ScenarioConfig sc;
  const std::string kind = cfg.get_string("scenario.kind", "latent_subgroup");
  if (kind == "latent_subgroup") sc.kind = ScenarioKind::latent_subgroup;
  else if (kind == "nonlinear_four") sc.kind = ScenarioKind::nonlinear_four;
  else if (kind == "emulated_education") sc.kind = ScenarioKind::emulated_education;
  else throw std::invalid_argument("scenario.kind: unknown kind '" + kind + "'");

  switch (sc.kind) {
    case ScenarioKind::latent_subgroup:
      sc.K = 50;
      sc.beta = {1.0, 0.0};
      break;
    case ScenarioKind::nonlinear_four:
      sc.K = 500;
      sc.beta = {-1.0, 1.0, 0.5, 0.0, -0.5, 0.0};
      break;
    case ScenarioKind::emulated_education:
      sc.K = 862;
      // intercept, latent effect, then the eight synthetic covariates
      sc.beta = {-0.9, 0.0, -0.05, 0.0, 0.0, -0.06, 0.03, -0.07, 0.33, 0.11};
      sc.n_min = 1;
      sc.n_max = 20;
      break;
  }

  sc.K = cfg.get_int("scenario.k", sc.K);
  if (cfg.has("scenario.beta")) {
    sc.beta = parse_double_list(cfg.get_string("scenario.beta", ""), "scenario.beta");
  } else {
    cfg.get_string("scenario.beta", "");  // mark consumed
  }
  for (size_t j = 0; j < 10; ++j) {
    const std::string key = "scenario.beta" + std::to_string(j);
    if (cfg.has(key)) {
      if (j >= sc.beta.size())
        throw std::invalid_argument(key + ": index exceeds beta length");
      sc.beta[j] = cfg.get_double(key, 0.0);
    } else {
      cfg.get_double(key, 0.0);  // mark consumed
    }
  }
  if (cfg.has("scenario.gamma")) {
    const auto g = parse_double_list(cfg.get_string("scenario.gamma", ""), "scenario.gamma");
    if (g.size() != 7) throw std::invalid_argument("scenario.gamma: need exactly 7 exponents");
    for (int i = 0; i < 7; ++i) sc.gamma[i] = g[i];
  } else {
    cfg.get_string("scenario.gamma", "");
  }
  sc.sigma2 = cfg.get_double("scenario.sigma2", sc.sigma2);
  sc.n_min = cfg.get_int("scenario.n_min", sc.n_min);
  sc.n_max = cfg.get_int("scenario.n_max", sc.n_max);
  sc.alpha1 = cfg.get_double("scenario.alpha1", sc.alpha1);
  sc.alpha2 = cfg.get_double("scenario.alpha2", sc.alpha2);
  const std::string dist = cfg.get_string("scenario.re_dist", "normal");
  if (dist == "normal") sc.re_dist = ReDist::normal;
  else if (dist == "t3_scaled") sc.re_dist = ReDist::t3_scaled;
  else if (dist == "exponential") sc.re_dist = ReDist::exponential;
  else if (dist == "gamma") sc.re_dist = ReDist::gamma;
  else throw std::invalid_argument("scenario.re_dist: unknown distribution '" + dist + "'");
  sc.tau2_true = cfg.get_double("scenario.tau2", sc.tau2_true);
  sc.replicates = cfg.get_int("scenario.replicates", sc.replicates);
  sc.seed = cfg.get_u64("seed", sc.seed);
  sc.tau_method = parse_tau_method(cfg.get_string("scenario.tau_method", "reml"));
  sc.risk_order = cfg.get_int("scenario.risk_order", sc.risk_order);
  const std::string table = cfg.get_string("scenario.covariate_table", "");
  if (!table.empty()) sc.covariate_table_path = table;
  return sc;
}

std::vector<std::pair<std::string, std::string>> scenario_provenance(const ScenarioConfig& sc) {
  std::vector<std::pair<std::string, std::string>> kv;
  kv.emplace_back("scenario.kind", scenario_kind_name(sc.kind));
  kv.emplace_back("scenario.k", std::to_string(sc.K));
  std::string betas;
  for (size_t j = 0; j < sc.beta.size(); ++j)
    betas += (j ? "," : "") + format_double(sc.beta[j]);
  kv.emplace_back("scenario.beta", betas);
  std::string gammas;
  for (int j = 0; j < 7; ++j) gammas += (j ? "," : "") + format_double(sc.gamma[j]);
  kv.emplace_back("scenario.gamma", gammas);
  kv.emplace_back("scenario.sigma2", format_double(sc.sigma2));
  kv.emplace_back("scenario.n_min", std::to_string(sc.n_min));
  kv.emplace_back("scenario.n_max", std::to_string(sc.n_max));
  kv.emplace_back("scenario.alpha1", format_double(sc.alpha1));
  kv.emplace_back("scenario.alpha2", format_double(sc.alpha2));
  kv.emplace_back("scenario.re_dist", re_dist_name(sc.re_dist));
  kv.emplace_back("scenario.tau2", format_double(sc.tau2_true));
  kv.emplace_back("scenario.replicates", std::to_string(sc.replicates));
  kv.emplace_back("scenario.tau_method", tau_method_name(sc.tau_method));
  kv.emplace_back("scenario.risk_order", std::to_string(sc.risk_order));
  if (sc.covariate_table_path) kv.emplace_back("scenario.covariate_table", *sc.covariate_table_path);
  kv.emplace_back("seed", std::to_string(sc.seed));
  return kv;
}

// Round-trips the config through its own echo so overrides follow the same
// parsing path (and unknown sweep keys are rejected).
void apply_override(ScenarioConfig& sc, const std::string& key, const std::string& value) {
  ConfigReader merged;
  for (const auto& [k, v] : scenario_provenance(sc)) merged.set(k, v);
  merged.set(key, value);
  sc = scenario_from_config(merged);
  merged.reject_unknown();
}

}  // namespace

int cmd_simulate(const SimulateCommandOptions& options) {
  ConfigReader cfg = ConfigReader::from_file(options.config_path);
  ScenarioConfig base = scenario_from_config(cfg);
  cfg.reject_unknown();

  std::string sweep_key = "-";
  std::vector<std::string> sweep_values = {"-"};
  if (options.sweep) {
    const auto eq = options.sweep->find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("--sweep expects key=v1,v2,..., got '" + *options.sweep + "'");
    sweep_key = options.sweep->substr(0, eq);
    sweep_values.clear();
    std::istringstream in(options.sweep->substr(eq + 1));
    std::string tok;
    while (std::getline(in, tok, ',')) sweep_values.push_back(tok);
    if (sweep_values.empty()) throw std::invalid_argument("--sweep: empty value list");
  }

  const int workers = options.workers > 0 ? options.workers : resolve_worker_count();

  std::vector<std::pair<std::string, SimResult>> runs;
  for (const auto& value : sweep_values) {
    ScenarioConfig sc = base;
    if (sweep_key != "-") apply_override(sc, sweep_key, value);
    runs.emplace_back(value, run_scenario(sc, workers));
  }

  fs::create_directories(options.out_dir);
  auto prov = scenario_provenance(base);
  prov.emplace_back("sweep", sweep_key == "-" ? "-" : *options.sweep);
  prov.emplace_back("config_file", options.config_path);

  {
    CsvWriter w((fs::path(options.out_dir) / "psel_summary.csv").string());
    add_common_provenance(w, prov);
    w.set_header({"sweep_key", "sweep_value", "kind", "k", "sigma2", "tau2_true", "alpha1",
                  "alpha2", "re_dist", "tau_method", "risk_order", "method", "mean_psel",
                  "se_psel", "mean_psel_proper", "se_psel_proper", "mean_ppsel", "se_ppsel",
                  "mean_rho1", "mean_rho2", "mean_tau2_hat", "n_reps", "n_failures"});
    for (const auto& [value, result] : runs) {
      const ScenarioConfig& sc = result.config;
      for (Method m : all_methods()) {
        const MethodSummary& s = result.summary.at(m);
        w.add_row({sweep_key, value, scenario_kind_name(sc.kind), std::to_string(sc.K),
                   CsvWriter::cell(sc.sigma2), CsvWriter::cell(sc.tau2_true),
                   CsvWriter::cell(sc.alpha1), CsvWriter::cell(sc.alpha2),
                   re_dist_name(sc.re_dist), tau_method_name(sc.tau_method),
                   std::to_string(sc.risk_order), method_name(m), CsvWriter::cell(s.mean_psel),
                   CsvWriter::cell(s.se_psel), CsvWriter::cell(s.mean_psel_proper),
                   CsvWriter::cell(s.se_psel_proper), CsvWriter::cell(s.mean_ppsel),
                   CsvWriter::cell(s.se_ppsel), CsvWriter::cell(result.mean_rho1),
                   CsvWriter::cell(result.mean_rho2), CsvWriter::cell(result.mean_tau2_hat),
                   std::to_string(result.replicates_done), std::to_string(result.failures)});
      }
    }
    w.write();
  }

  {
    CsvWriter w((fs::path(options.out_dir) / "psel_replicates.csv").string());
    add_common_provenance(w, prov);
    w.set_header({"sweep_value", "replicate", "method", "psel", "psel_proper", "ppsel", "rho1",
                  "rho2", "tau2_hat"});
    for (const auto& [value, result] : runs)
      for (const auto& rec : result.table)
        for (Method m : all_methods()) {
          const Losses& l = rec.losses.at(m);
          w.add_row({value, std::to_string(rec.replicate), method_name(m),
                     CsvWriter::cell(l.psel), CsvWriter::cell(l.psel_proper),
                     CsvWriter::cell(l.ppsel), CsvWriter::cell(rec.rho1),
                     CsvWriter::cell(rec.rho2), CsvWriter::cell(rec.tau2_hat)});
        }
    w.write();
  }

  if (options.plot && sweep_key != "-") {
    std::vector<SvgSeries> series;
    for (Method m : all_methods()) {
      SvgSeries s;
      s.label = method_name(m);
      for (const auto& [value, result] : runs) {
        s.x.push_back(std::stod(value));
        s.y.push_back(result.summary.at(m).mean_psel);
      }
      series.push_back(std::move(s));
    }
    const std::string svg =
        render_line_chart("mean PSEL vs " + sweep_key, sweep_key, "mean PSEL", series);
    std::ofstream out(fs::path(options.out_dir) / "curves.svg", std::ios::binary);
    out << svg;
  }

  if (!options.quiet) {
    std::cout << "simulate: version " << kVersion << ", config " << options.config_path
              << ", seed " << base.seed << ", workers " << workers << "\n";
    for (const auto& [value, result] : runs) {
      std::cout << "  sweep=" << value << " reps=" << result.replicates_done
                << " failures=" << result.failures;
      for (Method m : all_methods())
        std::cout << " " << method_name(m) << "=" << format_double(result.summary.at(m).mean_psel);
      std::cout << "\n";
      if (!result.failure_messages.empty())
        std::cout << "  first failure: " << result.failure_messages.front() << "\n";
    }
    std::cout << "wrote psel_summary.csv, psel_replicates.csv"
              << (options.plot && sweep_key != "-" ? ", curves.svg" : "") << " to "
              << options.out_dir << "\n";
  }
  return 0;
}

int cmd_validate(const ValidateCommandOptions& options) {
  ValidateOptions vopt;
  vopt.seed = options.seed;
  vopt.d_prime_fault = options.d_prime_fault;
  const auto results = run_validation_suites(vopt);
  bool all = true;
  for (const auto& r : results) {
    if (!options.quiet)
      std::cout << (r.passed ? "PASS" : "FAIL") << " " << r.name << ": " << r.detail << "\n";
    all = all && r.passed;
  }
  if (options.json_path) {
    std::ofstream out(*options.json_path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write report: " + *options.json_path);
    out << validation_report_json(results);
  }
  if (!options.quiet)
    std::cout << "validate: version " << kVersion << ", seed " << options.seed << ", "
              << (all ? "all suites passed" : "FAILURES present") << "\n";
  return all ? 0 : 1;
}

}  // namespace ropper
