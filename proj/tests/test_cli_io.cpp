#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <unistd.h>

#include <json.hpp>

#include "ropper/commands.hpp"
#include "ropper/config.hpp"
#include "ropper/csv.hpp"
#include "ropper/pipeline.hpp"
#include "ropper/rng.hpp"
#include "ropper/simulate.hpp"
#include "ropper/validate.hpp"

using namespace ropper;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("ropper_test_" + std::to_string(std::rand()) + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

std::string slurp(const std::string& path) { return read_file(path); }

}  // namespace

TEST_CASE("config parser") {
  ConfigReader cfg = ConfigReader::from_text(
      "# comment\n"
      "mm.max_iter = 250\n"
      "scenario.sigma2=5.0\n"
      "flag=true\n");
  CHECK(cfg.get_int("mm.max_iter", 1) == 250);
  CHECK(cfg.get_double("scenario.sigma2", 0.0) == 5.0);
  CHECK(cfg.get_bool("flag", false));
  CHECK(cfg.get_string("absent", "dflt") == "dflt");
  CHECK_NOTHROW(cfg.reject_unknown());

  ConfigReader unknown = ConfigReader::from_text("nope=1\n");
  CHECK_THROWS_WITH_AS(unknown.reject_unknown(), doctest::Contains("nope"),
                       std::invalid_argument);
  CHECK_THROWS(ConfigReader::from_text("a=1\na=2\n"));
  CHECK_THROWS(ConfigReader::from_text("novalue\n"));
  ConfigReader badnum = ConfigReader::from_text("x=abc\n");
  CHECK_THROWS(badnum.get_double("x", 0.0));
}

TEST_CASE("format_double round-trips doubles") {
  Rng rng(501);
  for (int t = 0; t < 200; ++t) {
    const double v = rng.normal(0.0, 1e3) * std::pow(10.0, rng.uniform_int(-8, 8));
    CHECK(std::stod(format_double(v)) == v);
  }
}

TEST_CASE("dataset CSV reader schema errors carry coordinates") {
  TempDir tmp;
  const std::string path = tmp.file("in.csv");

  write_text(path, "id,y,sigma,x1\nA,1.0,0.5,2.0\nB,2.0,0.25,1.0\nC,0.5,1.0,0.0\n");
  const Dataset d = read_dataset_csv(path, false);
  CHECK(d.size() == 3);
  CHECK(d.dim() == 1);
  CHECK(d.units[1].id == "B");
  CHECK(d.units[1].y == 2.0);

  const Dataset di = read_dataset_csv(path, true);
  CHECK(di.dim() == 2);
  CHECK(di.units[2].x(0) == 1.0);
  CHECK(di.units[2].x(1) == 0.0);

  write_text(path, "id,y,x1\nA,1.0,2.0\n");
  CHECK_THROWS_WITH_AS(read_dataset_csv(path, false), doctest::Contains("sigma"),
                       std::invalid_argument);

  write_text(path, "id,y,sigma,x1\nA,1.0,0.5,2.0\nB,nan,0.2,1.0\n");
  CHECK_THROWS_WITH_AS(read_dataset_csv(path, false), doctest::Contains("row 2"),
                       std::invalid_argument);

  write_text(path, "id,y,sigma,x1\nA,1.0,0.5\n");
  CHECK_THROWS(read_dataset_csv(path, false));

  write_text(path, "id,y,sigma,x1,n\nA,1.0,0.5,2.0,3.5\n");
  CHECK_THROWS_WITH_AS(read_dataset_csv(path, false), doctest::Contains("'n'"),
                       std::invalid_argument);
}

TEST_CASE("cmd_fit output equals a manual library composition") {
  TempDir tmp;
  const std::string input = tmp.file("units.csv");
  write_text(input,
             "id,y,sigma,x1\n"
             "A,0.8,0.5,-0.2\n"
             "B,-1.1,1.0,0.4\n"
             "C,2.0,0.7,1.3\n"
             "D,0.1,1.4,-0.9\n"
             "E,-0.6,0.3,0.2\n"
             "F,1.4,0.9,0.7\n");

  FitCommandOptions opt;
  opt.input_path = input;
  opt.out_dir = tmp.file("out");
  opt.intercept = true;
  opt.quiet = true;
  CHECK(cmd_fit(opt) == 0);

  const Dataset d = read_dataset_csv(input, true);
  FitOptions fopt;
  const FitResult expected = fit(d, fopt);

  // parse percentiles.csv back and compare the raw columns
  std::istringstream in(slurp(tmp.file("out") + "/percentiles.csv"));
  std::string line;
  std::vector<std::vector<std::string>> rows;
  bool saw_provenance = false;
  while (std::getline(in, line)) {
    if (line.rfind("# ", 0) == 0) {
      saw_provenance = true;
      continue;
    }
    std::vector<std::string> cells;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  CHECK(saw_provenance);
  REQUIRE(rows.size() == 7);  // header + 6 units
  CHECK(rows[0][1] == "ropper_raw");
  for (int k = 0; k < 6; ++k) {
    CHECK(std::stod(rows[k + 1][1]) ==
          doctest::Approx(expected.percentiles.at(Method::ropper).raw->values(k)).epsilon(1e-15));
    CHECK(std::stod(rows[k + 1][4]) ==
          doctest::Approx(expected.percentiles.at(Method::pepp_mle).proper.values(k))
              .epsilon(1e-15));
  }

  // coefficients.csv rows = p terms, and the intercept flag added a column
  std::istringstream cin(slurp(tmp.file("out") + "/coefficients.csv"));
  int coef_rows = 0;
  while (std::getline(cin, line))
    if (!line.empty() && line[0] != '#') ++coef_rows;
  CHECK(coef_rows == 1 + 2);  // header + intercept + x1

  // outputs carry no timestamps; a rerun is byte-identical
  FitCommandOptions opt2 = opt;
  opt2.out_dir = tmp.file("out2");
  CHECK(cmd_fit(opt2) == 0);
  for (const char* name : {"percentiles.csv", "coefficients.csv", "diagnostics.csv"})
    CHECK(slurp(tmp.file("out") + "/" + name) == slurp(tmp.file("out2") + "/" + name));
}

TEST_CASE("cmd_simulate determinism, sweep schema, plot, and config round-trip") {
  TempDir tmp;
  const std::string config = tmp.file("scenario.cfg");
  write_text(config,
             "scenario.kind=latent_subgroup\n"
             "scenario.k=15\n"
             "scenario.beta=1.0,0.5\n"
             "scenario.sigma2=2.0\n"
             "scenario.replicates=2\n"
             "seed=31\n");

  SimulateCommandOptions opt;
  opt.config_path = config;
  opt.out_dir = tmp.file("o1");
  opt.workers = 1;
  opt.quiet = true;
  CHECK(cmd_simulate(opt) == 0);
  opt.out_dir = tmp.file("o2");
  CHECK(cmd_simulate(opt) == 0);
  CHECK(slurp(tmp.file("o1") + "/psel_summary.csv") == slurp(tmp.file("o2") + "/psel_summary.csv"));
  CHECK(slurp(tmp.file("o1") + "/psel_replicates.csv") ==
        slurp(tmp.file("o2") + "/psel_replicates.csv"));

  // worker count must not change the bytes
  opt.out_dir = tmp.file("o4");
  opt.workers = 4;
  CHECK(cmd_simulate(opt) == 0);
  CHECK(slurp(tmp.file("o1") + "/psel_summary.csv") == slurp(tmp.file("o4") + "/psel_summary.csv"));

  // sweep: 3 grid points x 4 methods = 12 data rows; plot emitted
  opt.out_dir = tmp.file("sweep");
  opt.workers = 2;
  opt.sweep = "scenario.beta1=-1,0,1";
  opt.plot = true;
  CHECK(cmd_simulate(opt) == 0);
  std::istringstream sin(slurp(tmp.file("sweep") + "/psel_summary.csv"));
  std::string line;
  int data_rows = 0;
  bool header_seen = false;
  while (std::getline(sin, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      header_seen = true;
      continue;
    }
    ++data_rows;
  }
  CHECK(data_rows == 12);
  const std::string svg = slurp(tmp.file("sweep") + "/curves.svg");
  CHECK(svg.find("<svg") != std::string::npos);
  CHECK(std::count(svg.begin(), svg.end(), '\n') > 10);
  size_t polylines = 0, pos = 0;
  while ((pos = svg.find("<polyline", pos)) != std::string::npos) {
    ++polylines;
    pos += 9;
  }
  CHECK(polylines == 4);

  // re-running from the embedded provenance reproduces the bytes
  std::istringstream pin(slurp(tmp.file("o1") + "/psel_summary.csv"));
  std::ostringstream rebuilt;
  while (std::getline(pin, line)) {
    if (line.rfind("# ", 0) != 0) break;
    const std::string kv = line.substr(2);
    const auto eq = kv.find('=');
    const std::string key = kv.substr(0, eq);
    if (key.rfind("scenario.", 0) == 0 || key == "seed")
      rebuilt << kv << "\n";
  }
  const std::string config2 = tmp.file("rebuilt.cfg");
  write_text(config2, rebuilt.str());
  SimulateCommandOptions opt2;
  opt2.config_path = config2;
  opt2.out_dir = tmp.file("o3");
  opt2.workers = 1;
  opt2.quiet = true;
  CHECK(cmd_simulate(opt2) == 0);
  // compare ignoring the config_file provenance line, which names the file
  auto strip_cfgline = [](const std::string& text) {
    std::istringstream in2(text);
    std::string l, out;
    while (std::getline(in2, l))
      if (l.rfind("# config_file=", 0) != 0) out += l + "\n";
    return out;
  };
  CHECK(strip_cfgline(slurp(tmp.file("o1") + "/psel_summary.csv")) ==
        strip_cfgline(slurp(tmp.file("o3") + "/psel_summary.csv")));

  // unknown config keys rejected
  const std::string config3 = tmp.file("bad.cfg");
  write_text(config3, "scenario.kind=latent_subgroup\nbogus.key=1\n");
  SimulateCommandOptions opt3;
  opt3.config_path = config3;
  opt3.out_dir = tmp.file("o5");
  opt3.quiet = true;
  CHECK_THROWS(cmd_simulate(opt3));
}

TEST_CASE("CLI options override config file settings") {
  TempDir tmp;
  const std::string input = tmp.file("in.csv");
  write_text(input,
             "id,y,sigma,x1\nA,0.5,0.5,0.1\nB,-0.2,0.8,0.6\nC,1.1,0.4,0.9\nD,0.2,1.0,-0.3\n"
             "E,-0.8,0.6,0.4\nF,0.9,0.7,0.2\n");
  const std::string cfg = tmp.file("fit.cfg");
  write_text(cfg, "tau.method=nn\nseed=5\n");

  FitCommandOptions opt;
  opt.input_path = input;
  opt.config_path = cfg;
  opt.tau_method = "reml";  // flag wins over tau.method=nn
  opt.intercept = true;
  opt.out_dir = tmp.file("o");
  opt.quiet = true;
  CHECK(cmd_fit(opt) == 0);
  const std::string head = slurp(tmp.file("o") + "/coefficients.csv");
  CHECK(head.find("# tau.method=reml") != std::string::npos);
  CHECK(head.find("# seed=5") != std::string::npos);
}

TEST_CASE("emulated scenario accepts a user covariate table") {
  TempDir tmp;
  const std::string table = tmp.file("cov.csv");
  std::ostringstream rows;
  rows << "a,b\n";
  Rng rng(881);
  for (int i = 0; i < 30; ++i) rows << format_double(rng.uniform01()) << "," << format_double(rng.normal()) << "\n";
  write_text(table, rows.str());

  ScenarioConfig cfg;
  cfg.kind = ScenarioKind::emulated_education;
  cfg.K = 25;
  cfg.beta = {0.5, 0.0, 1.0, -0.5};  // intercept, latent, a, b
  cfg.sigma2 = 2.0;
  cfg.n_max = 10;
  cfg.tau2_true = 1.0;
  cfg.replicates = 3;
  cfg.seed = 99;
  cfg.covariate_table_path = table;
  const SimResult r = run_scenario(cfg, 1);
  CHECK(r.replicates_done == 3);
  CHECK(r.failures == 0);

  // design is intercept + the two table columns, first K rows verbatim
  const CovariateTable loaded = read_covariate_table(table);
  const GenOutput g = gen_emulated(cfg, loaded, StreamFactory(cfg.seed, 0));
  CHECK(g.data.dim() == 3);
  CHECK(g.data.units[7].x(1) == loaded.values(7, 0));
  CHECK(g.data.units[7].x(2) == loaded.values(7, 1));

  // wrong coefficient count is rejected
  ScenarioConfig bad = cfg;
  bad.beta = {0.5, 0.0, 1.0};
  CHECK_THROWS(run_scenario(bad, 1));
}

TEST_CASE("RANK_THREADS caps the worker count") {
  setenv("RANK_THREADS", "3", 1);
  CHECK(resolve_worker_count() == 3);
  setenv("RANK_THREADS", "junk", 1);
  CHECK(resolve_worker_count() >= 1);  // falls back to the hardware default
  unsetenv("RANK_THREADS");
  CHECK(resolve_worker_count() >= 1);
}

TEST_CASE("cmd_validate report schema and fault injection") {
  TempDir tmp;
  ValidateCommandOptions opt;
  opt.quiet = true;
  opt.json_path = tmp.file("report.json");
  CHECK(cmd_validate(opt) == 0);

  const auto j = nlohmann::json::parse(slurp(tmp.file("report.json")));
  CHECK(j["all_passed"] == true);
  REQUIRE(j["suites"].size() == 4);
  std::set<std::string> names;
  for (const auto& s : j["suites"]) {
    names.insert(s["name"].get<std::string>());
    CHECK(s["passed"] == true);
  }
  CHECK(names ==
        std::set<std::string>{"stein_identity", "descent", "proper_projection", "derivative_fd"});

  // corrupting the curvature derivative must fail the descent suite
  ValidateCommandOptions bad = opt;
  bad.json_path = tmp.file("bad.json");
  bad.d_prime_fault = 0.05;
  CHECK(cmd_validate(bad) == 1);
  const auto jb = nlohmann::json::parse(slurp(tmp.file("bad.json")));
  CHECK(jb["all_passed"] == false);
  for (const auto& s : jb["suites"])
    if (s["name"] == "descent") CHECK(s["passed"] == false);
}
