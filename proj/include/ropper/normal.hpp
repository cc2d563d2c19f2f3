#pragma once

namespace ropper {

// Standard normal CDF, erfc-based. Absolute error below 1e-14 on |z| <= 8,
// saturates to 0/1 in the extreme tails.
double normal_cdf(double z);

// Standard normal density.
double normal_pdf(double z);

// Inverse standard normal CDF (Wichura's PPND16 rational approximation,
// polished with one Halley step). Used for inverse-CDF sampling and as a
// reference quantile in checks. p must lie in (0,1).
double normal_quantile(double p);

}  // namespace ropper
