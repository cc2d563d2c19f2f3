#include <doctest.h>

#include <cmath>

#include "ropper/core_model.hpp"
#include "ropper/loss.hpp"
#include "ropper/normal.hpp"
#include "ropper/pipeline.hpp"
#include "ropper/rng.hpp"
#include "ropper/simulate.hpp"

using namespace ropper;

namespace {

Dataset two_symmetric_units() {
  Dataset d;
  for (double y : {-1.0, 1.0}) {
    UnitRecord u;
    u.y = y;
    u.sigma = 0.8;
    u.x = VectorXd::Ones(1);
    d.units.push_back(u);
  }
  return d;
}

}  // namespace

TEST_CASE("fit on two symmetric units gives identical proper percentiles everywhere") {
  const FitResult res = fit(two_symmetric_units(), FitOptions{});
  const VectorXd expected = (VectorXd(2) << 1.0 / 3.0, 2.0 / 3.0).finished();
  for (Method m : all_methods())
    CHECK((res.percentiles.at(m).proper.values - expected).lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("equal sigmas make BLUP and residual proper percentiles coincide") {
  Rng rng(401);
  Dataset d;
  for (int k = 0; k < 15; ++k) {
    UnitRecord u;
    u.x.resize(2);
    u.x << 1.0, rng.normal();
    u.sigma = 1.3;
    u.y = rng.normal(0.0, 2.0);
    d.units.push_back(u);
  }
  const FitResult res = fit(d, FitOptions{});
  CHECK((res.percentiles.at(Method::blup_perc).proper.values -
         res.percentiles.at(Method::residual_perc).proper.values)
            .lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("fit output structure and determinism") {
  Rng rng(403);
  Dataset d;
  for (int k = 0; k < 25; ++k) {
    UnitRecord u;
    u.id = "s" + std::to_string(k);
    u.x.resize(2);
    u.x << 1.0, rng.normal();
    u.sigma = rng.uniform(0.4, 2.0);
    u.y = rng.normal(0.0, 2.0);
    d.units.push_back(u);
  }
  FitOptions opt;
  opt.nn_seed = 7;
  const FitResult a = fit(d, opt);
  const FitResult b = fit(d, opt);
  CHECK(a.tau.tau2 == b.tau.tau2);
  CHECK((a.beta_rfure - b.beta_rfure).lpNorm<Eigen::Infinity>() == 0.0);

  CHECK(a.percentiles.size() == 4);
  for (Method m : {Method::ropper, Method::pepp_mle}) {
    const auto& perc = a.percentiles.at(m);
    REQUIRE(perc.raw.has_value());
    for (int k = 0; k < d.size(); ++k) {
      CHECK(perc.raw->values(k) > 0.0);
      CHECK(perc.raw->values(k) < 1.0);
    }
  }
  CHECK(!a.percentiles.at(Method::blup_perc).raw.has_value());
  CHECK(!a.percentiles.at(Method::residual_perc).raw.has_value());

  // ropper raw values are the percentile rule evaluated at beta_rfure
  const WorkingParams params{a.beta_rfure, std::sqrt(a.tau.tau2)};
  for (int k = 0; k < d.size(); ++k)
    CHECK(a.percentiles.at(Method::ropper).raw->values(k) ==
          doctest::Approx(pepp(d.units[k], params)).epsilon(1e-15));

  CHECK(a.diagnostics.size() == 25);
  CHECK(a.diagnostics[3].id == "s3");
  CHECK(a.mm_trace.iterates.size() >= 1);
}

TEST_CASE("fit stage errors carry the stage label") {
  Dataset d;
  for (int k = 0; k < 6; ++k) {
    UnitRecord u;
    u.x.resize(2);
    u.x << 1.0, 1.0;  // duplicated column: singular design
    u.y = k;
    u.sigma = 1.0;
    d.units.push_back(u);
  }
  CHECK_THROWS_WITH_AS(fit(d, FitOptions{}), doctest::Contains("fit["), std::runtime_error);
}

TEST_CASE("degenerate tau collapses estimates to one half with a warning") {
  Rng rng(407);
  Dataset d;
  for (int k = 0; k < 40; ++k) {
    UnitRecord u;
    u.x = VectorXd::Ones(1);
    u.sigma = 1.0;
    u.y = 1e-6 * rng.normal();  // essentially no between-unit variation
    d.units.push_back(u);
  }
  const FitResult res = fit(d, FitOptions{});
  REQUIRE(!res.warnings.empty());
  const VectorXd raw = res.percentiles.at(Method::ropper).raw->values;
  for (int k = 0; k < d.size(); ++k) CHECK(raw(k) == doctest::Approx(0.5).epsilon(1e-6));
  // proper projection still a valid permutation via index-order ties
  VectorXd sorted = res.percentiles.at(Method::ropper).proper.values;
  std::sort(sorted.data(), sorted.data() + sorted.size());
  for (int k = 0; k < d.size(); ++k)
    CHECK(sorted(k) == doctest::Approx((k + 1.0) / (d.size() + 1)).epsilon(1e-12));
}

TEST_CASE("score targets and the constant-estimate closed form") {
  Rng rng(409);
  Dataset d;
  const int K = 30;
  for (int k = 0; k < K; ++k) {
    UnitRecord u;
    u.x = VectorXd::Ones(1);
    u.sigma = 1e-6;  // keeps tau-hat well away from zero
    u.y = rng.normal(0.0, 1.5);
    d.units.push_back(u);
  }
  const FitResult res = fit(d, FitOptions{});

  // choose a truth that makes the ropper estimates exact
  const double tau_true = 0.9;
  LatentTruth truth;
  truth.tau_true = tau_true;
  truth.v.resize(K);
  const VectorXd raw = res.percentiles.at(Method::ropper).raw->values;
  for (int k = 0; k < K; ++k) truth.v(k) = tau_true * normal_quantile(raw(k));
  truth.mu = VectorXd::Zero(K);

  const auto losses = score(res, truth);
  CHECK(losses.size() == 4);
  for (Method m : all_methods()) CHECK(losses.count(m) == 1);
  CHECK(losses.at(Method::ropper).ppsel < 1e-20);
  CHECK(losses.at(Method::ropper).psel_proper < 1e-20);

  // a constant 1/2 estimate scores the variance of proper percentiles
  VectorXd half = VectorXd::Constant(K, 0.5);
  const VectorXd target = empirical_percentiles(truth.v).values;
  double loop = 0.0;
  for (int k = 0; k < K; ++k) loop += (target(k) - 0.5) * (target(k) - 0.5);
  loop /= K;
  CHECK(psel(target, half) == doctest::Approx(loop).epsilon(1e-14));
  CHECK_THROWS(score(res, LatentTruth{VectorXd::Zero(3), VectorXd::Zero(3), 1.0}));
}

TEST_CASE("ranking-targeted fit beats the MLE plug-in under misspecification") {
  // The strongly nonlinear surface drags the GLS plane; the risk-minimizing
  // coefficients protect the percentile estimates and the paired PSEL
  // difference comes out decisively negative.
  ScenarioConfig cfg;
  cfg.kind = ScenarioKind::nonlinear_four;
  cfg.K = 200;
  cfg.beta = {-1.0, 1.0, 0.5, 0.0, -0.5, 0.5};
  cfg.sigma2 = 2.0;
  cfg.n_min = 1;
  cfg.n_max = 20;
  cfg.tau2_true = 1.0;
  cfg.replicates = 120;
  cfg.seed = 20240612;
  const SimResult sim = run_scenario(cfg, 0);
  const PairedDiff diff = paired_psel_diff(sim, Method::ropper, Method::pepp_mle);
  CHECK(diff.mean < 0.0);
  CHECK(-diff.mean >= 2.0 * diff.se);
}
