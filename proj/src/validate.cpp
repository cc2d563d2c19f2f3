#include "ropper/validate.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "ropper/core_model.hpp"
#include "ropper/loss.hpp"
#include "ropper/mm.hpp"
#include "ropper/normal.hpp"
#include "ropper/risk.hpp"

namespace ropper {

RandomInstance random_instance(Rng& rng, int K, int p) {
  RandomInstance inst;
  inst.tau = rng.uniform(0.5, 1.5);
  VectorXd beta(p);
  for (int j = 0; j < p; ++j) beta(j) = rng.normal();
  inst.data.units.resize(K);
  for (int k = 0; k < K; ++k) {
    UnitRecord& u = inst.data.units[k];
    u.id = "u" + std::to_string(k);
    u.x.resize(p);
    u.x(0) = 1.0;
    for (int j = 1; j < p; ++j) u.x(j) = rng.normal();
    u.sigma = rng.uniform(0.2, 2.0);
    u.y = u.x.dot(beta) + inst.tau * rng.normal() + u.sigma * rng.normal();
  }
  return inst;
}

double central_fd(const std::function<double(double)>& f, double x, int m, double h) {
  switch (m) {
    case 1:
      return (f(x + h) - f(x - h)) / (2.0 * h);
    case 2:
      return (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h);
    case 3:
      return (f(x + 2 * h) - 2.0 * f(x + h) + 2.0 * f(x - h) - f(x - 2 * h)) /
             (2.0 * h * h * h);
    case 4:
      return (f(x + 2 * h) - 4.0 * f(x + h) + 6.0 * f(x) - 4.0 * f(x - h) + f(x - 2 * h)) /
             (h * h * h * h);
    case 5:
      return (f(x + 3 * h) - 4.0 * f(x + 2 * h) + 5.0 * f(x + h) - 5.0 * f(x - h) +
              4.0 * f(x - 2 * h) - f(x - 3 * h)) /
             (2.0 * std::pow(h, 5));
    default:
      throw std::invalid_argument("central_fd: m out of range");
  }
}

double richardson_fd(const std::function<double(double)>& f, double x, int m, double h0) {
  // Romberg tableau over five halvings of the O(h^2) stencils -> O(h^10).
  double row[5];
  for (int i = 0; i < 5; ++i) row[i] = central_fd(f, x, m, h0 / std::pow(2.0, i));
  double fac = 4.0;
  for (int lev = 1; lev < 5; ++lev) {
    for (int i = 4; i >= lev; --i) row[i] = (fac * row[i] - row[i - 1]) / (fac - 1.0);
    fac *= 4.0;
  }
  return row[4];
}

namespace {

std::string fmt(double v) {
  std::ostringstream oss;
  oss.precision(6);
  oss << v;
  return oss.str();
}

SuiteResult stein_identity_suite(std::uint64_t seed) {
  SuiteResult res{"stein_identity", true, ""};
  const int draws = 100000;
  const double tau = 1.0, sigma = 0.8, mu = 0.9;
  WorkingParams params{VectorXd::Constant(1, 0.3), tau};
  UnitRecord unit;
  unit.sigma = sigma;
  unit.x = VectorXd::Ones(1);

  auto g_deriv = [&](double y, int m) {
    unit.y = y;
    return m == 0 ? pepp(unit, params) : pepp_derivative(unit, params, m);
  };

  std::ostringstream detail;
  for (int h = 0; h <= 2; ++h) {
    Rng rng = Rng::derive(seed, 0x737465696eULL, h);
    std::vector<double> diffs(draws);
    for (int i = 0; i < draws; ++i) {
      const double v = tau * rng.normal();
      const double y = mu + v + sigma * rng.normal();
      double lhs = std::pow(v, h + 1) * g_deriv(y, 0);
      double rhs = 0.0;
      for (int j = 0; j <= (h + 1) / 2; ++j) {
        const double coeff = std::tgamma(h + 2.0) /
                             (std::pow(2.0, j) * std::tgamma(h + 2.0 - 2.0 * j) *
                              std::tgamma(j + 1.0)) *
                             std::pow(tau * tau, h + 1 - j);
        rhs += coeff * g_deriv(y, h - 2 * j + 1);
      }
      diffs[i] = lhs - rhs;
    }
    const double mean = pairwise_sum(diffs.data(), draws) / draws;
    double ss = 0.0;
    for (double d : diffs) ss += (d - mean) * (d - mean);
    const double se = std::sqrt(ss / (draws - 1.0) / draws);
    detail << "h=" << h << ": |mean|=" << fmt(std::fabs(mean)) << " se=" << fmt(se) << "; ";
    if (std::fabs(mean) > 4.0 * se) res.passed = false;
  }
  res.detail = detail.str();
  return res;
}

SuiteResult descent_suite(std::uint64_t seed, double d_prime_fault) {
  SuiteResult res{"descent", true, ""};

  // Curvature bound for the majorizer: sup d'(u) <= 1/3.
  double max_dprime = -1e300;
  for (int i = -10000; i <= 10000; ++i) {
    const double u = i * 1e-3;
    max_dprime = std::max(max_dprime, d_prime(u) + d_prime_fault);
  }
  const bool bound_ok = max_dprime <= 1.0 / 3.0 + 1e-9;

  // Monotone objective decrease and MLE dominance on random instances.
  Rng rng = Rng::derive(seed, 0x64657363656e74ULL);
  int violations = 0;
  for (int t = 0; t < 200; ++t) {
    const int K = t % 2 == 0 ? 10 : 40;
    const int p = t % 3 == 0 ? 3 : 1;
    RandomInstance inst = random_instance(rng, K, p);
    MMConfig cfg;
    MMResult result = minimize_qhat(inst.data, inst.tau, cfg);
    double prev = result.trace.iterates.front().second;
    for (const auto& [b, q] : result.trace.iterates) {
      if (q > prev + 1e-12) ++violations;
      prev = q;
    }
    const double q_mle = qhat1(inst.data, mle_beta(inst.data, inst.tau), inst.tau);
    if (result.trace.iterates.back().second > q_mle + 1e-12) ++violations;
  }

  res.passed = bound_ok && violations == 0;
  res.detail = "max d'=" + fmt(max_dprime) + " (bound 1/3), descent violations: " +
               std::to_string(violations) + "/200 instances";
  return res;
}

SuiteResult proper_projection_suite(std::uint64_t seed) {
  SuiteResult res{"proper_projection", true, ""};
  Rng rng = Rng::derive(seed, 0x70726f6a65637400ULL);
  int mismatches = 0;
  for (int K = 3; K <= 7; ++K) {
    for (int t = 0; t < 50; ++t) {
      VectorXd r(K);
      for (int k = 0; k < K; ++k) r(k) = rng.uniform01();
      const VectorXd proj = proper_percentiles(r).values;

      std::vector<int> perm(K);
      std::iota(perm.begin(), perm.end(), 1);
      double best = 1e300;
      std::vector<int> best_perm;
      do {
        double obj = 0.0;
        for (int k = 0; k < K; ++k) {
          const double diff = perm[k] / static_cast<double>(K + 1) - r(k);
          obj += diff * diff;
        }
        if (obj < best) {
          best = obj;
          best_perm = perm;
        }
      } while (std::next_permutation(perm.begin(), perm.end()));

      for (int k = 0; k < K; ++k)
        if (std::fabs(proj(k) - best_perm[k] / static_cast<double>(K + 1)) > 1e-15) {
          ++mismatches;
          break;
        }
    }
  }
  res.passed = mismatches == 0;
  res.detail = "mismatches vs exhaustive permutation search: " + std::to_string(mismatches) +
               "/250 instances";
  return res;
}

SuiteResult derivative_fd_suite(std::uint64_t seed) {
  SuiteResult res{"derivative_fd", true, ""};
  Rng rng = Rng::derive(seed, 0x6664636865636bULL);
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    const double tau = rng.uniform(0.5, 1.5);
    const double sigma = rng.uniform(0.3, 2.0);
    WorkingParams params{VectorXd::Zero(1), tau};
    UnitRecord unit;
    unit.sigma = sigma;
    unit.x = VectorXd::Ones(1);
    unit.y = rng.uniform(-3.0, 3.0);
    const double v = ranking_shrink(sigma, tau);
    auto f = [&](double y) {
      UnitRecord u = unit;
      u.y = y;
      return pepp(u, params);
    };
    for (int m = 1; m <= 5; ++m) {
      // Step in y-units so the z-step is 0.6, where the Romberg tableau
      // balances truncation against roundoff for all m <= 5.
      const double h = 0.6 / v;
      const double fd = richardson_fd(f, unit.y, m, h);
      const double exact = pepp_derivative(unit, params, m);
      const double scale = std::max(std::fabs(exact), 1e-3 * std::pow(v, m));
      worst = std::max(worst, std::fabs(fd - exact) / scale);
    }
  }
  res.passed = worst <= 1e-5;
  res.detail = "worst relative error over m<=5 at 100 points: " + fmt(worst);
  return res;
}

}  // namespace

std::vector<SuiteResult> run_validation_suites(const ValidateOptions& options) {
  return {
      stein_identity_suite(options.seed),
      descent_suite(options.seed, options.d_prime_fault),
      proper_projection_suite(options.seed),
      derivative_fd_suite(options.seed),
  };
}

std::string validation_report_json(const std::vector<SuiteResult>& results) {
  nlohmann::json j;
  j["suites"] = nlohmann::json::array();
  bool all = true;
  for (const auto& r : results) {
    j["suites"].push_back({{"name", r.name}, {"passed", r.passed}, {"detail", r.detail}});
    all = all && r.passed;
  }
  j["all_passed"] = all;
  return j.dump(2) + "\n";
}

}  // namespace ropper
