#include <doctest.h>

#include <cmath>

#include "ropper/normal.hpp"
#include "reference.hpp"

using namespace ropper;

TEST_CASE("normal_cdf basic values") {
  CHECK(normal_cdf(0.0) == doctest::Approx(0.5).epsilon(1e-15));
  // 0.975 quantile of the standard normal
  CHECK(std::fabs(normal_cdf(1.959963985) - 0.975) < 1e-10);
  CHECK(normal_cdf(40.0) == 1.0);
  CHECK(normal_cdf(-40.0) == 0.0);
}

TEST_CASE("normal_pdf at zero is 1/sqrt(2*pi)") {
  CHECK(std::fabs(normal_pdf(0.0) - 0.3989422804014327) < 1e-15);
}

TEST_CASE("normal_cdf accuracy against series reference on |z| <= 8") {
  double worst = 0.0;
  for (int i = -800; i <= 800; ++i) {
    const double z = i * 0.01;
    worst = std::max(worst, std::fabs(normal_cdf(z) - testref::normal_cdf_ref(z)));
  }
  CHECK(worst < 1e-12);
}

TEST_CASE("normal_cdf symmetry and monotonicity") {
  double prev = -1.0;
  for (int i = -800; i <= 800; ++i) {
    const double z = i * 0.01;
    const double c = normal_cdf(z);
    CHECK(std::fabs(c + normal_cdf(-z) - 1.0) < 1e-15);
    CHECK(c >= prev);
    prev = c;
  }
}

TEST_CASE("normal_quantile inverts the cdf") {
  for (int i = 1; i < 200; ++i) {
    const double p = i / 200.0;
    const double z = normal_quantile(p);
    CHECK(std::fabs(normal_cdf(z) - p) < 1e-14);
  }
  CHECK(std::fabs(normal_quantile(0.975) - 1.959963984540054) < 1e-11);
  CHECK_THROWS(normal_quantile(0.0));
  CHECK_THROWS(normal_quantile(1.0));
}
