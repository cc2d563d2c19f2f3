#include "ropper/loss.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "ropper/normal.hpp"

namespace ropper {

PercentileVector empirical_percentiles(const VectorXd& v) {
  const int K = static_cast<int>(v.size());
  if (K < 1) throw std::invalid_argument("empirical_percentiles: empty vector");
  std::vector<double> sorted(v.data(), v.data() + K);
  std::sort(sorted.begin(), sorted.end());
  VectorXd out(K);
  for (int k = 0; k < K; ++k) {
    const auto it = std::upper_bound(sorted.begin(), sorted.end(), v(k));
    out(k) = static_cast<double>(it - sorted.begin()) / (K + 1);
  }
  return {out, PercKind::proper};
}

double population_percentile(double v, double tau) {
  if (!(tau > 0.0)) throw std::invalid_argument("population_percentile: tau must be > 0");
  return normal_cdf(v / tau);
}

static double mean_sq_diff(const VectorXd& a, const VectorXd& b, const char* what) {
  if (a.size() != b.size())
    throw std::invalid_argument(std::string(what) + ": length mismatch (" +
                                std::to_string(a.size()) + " vs " + std::to_string(b.size()) + ")");
  if (a.size() == 0) throw std::invalid_argument(std::string(what) + ": empty vectors");
  return (a - b).squaredNorm() / static_cast<double>(a.size());
}

double psel(const VectorXd& truth_percs, const VectorXd& estimates) {
  return mean_sq_diff(truth_percs, estimates, "psel");
}

double ppsel(const VectorXd& rho, const VectorXd& estimates) {
  return mean_sq_diff(rho, estimates, "ppsel");
}

PercentileVector proper_percentiles(const VectorXd& r) {
  const int K = static_cast<int>(r.size());
  if (K < 1) throw std::invalid_argument("proper_percentiles: empty vector");
  std::vector<int> order(K);
  std::iota(order.begin(), order.end(), 0);
  // stable_sort on value keeps ties in input order.
  std::stable_sort(order.begin(), order.end(), [&](int i, int j) { return r(i) < r(j); });
  VectorXd out(K);
  for (int pos = 0; pos < K; ++pos) out(order[pos]) = static_cast<double>(pos + 1) / (K + 1);
  return {out, PercKind::proper};
}

}  // namespace ropper
