#pragma once

// Independent reference implementations used only as test oracles. These
// deliberately use different algorithms from the library code they check.

#include <cmath>
#include <vector>

namespace testref {

// Standard normal CDF via the Taylor-style series
//   Phi(z) = 1/2 + phi(z) * sum_{k>=0} z^(2k+1) / (1*3*5*...*(2k+1))
// evaluated in long double. Converges for all z; accurate to well below
// 1e-15 for |z| <= 8.
inline long double normal_cdf_series(long double z) {
  const long double phi = std::exp(-0.5L * z * z) / std::sqrt(2.0L * 3.14159265358979323846264338327950288L);
  long double term = z;
  long double sum = z;
  for (int k = 1; k < 800; ++k) {
    term *= z * z / (2.0L * k + 1.0L);
    sum += term;
    if (std::fabs(term) < 1e-22L * std::fabs(sum)) break;
  }
  return 0.5L + phi * sum;
}

inline double normal_cdf_ref(double z) {
  if (z > 9.0) return 1.0;
  if (z < -9.0) return 0.0;
  return static_cast<double>(normal_cdf_series(static_cast<long double>(z)));
}

inline double normal_pdf_ref(double z) {
  return std::exp(-0.5 * z * z) / std::sqrt(2.0 * 3.141592653589793238462643383279503);
}

// Naive loop-based mean squared difference.
inline double mean_sq_loop(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s / static_cast<double>(a.size());
}

}  // namespace testref
