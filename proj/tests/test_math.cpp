#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "ssvb/math.hpp"

using namespace ssvb;

TEST_CASE("sigmoid basic values") {
  CHECK(sigmoid(0.0) == 0.5);
  CHECK(std::fabs(sigmoid(40.0) - 1.0) < 1e-15);
  CHECK(sigmoid(2.0) == Catch::Approx(0.8807970779778823).epsilon(1e-14));
  CHECK(sigmoid(-745.0) > 0.0);  // no underflow to a NaN path
  CHECK(sigmoid(745.0) == 1.0);
}

TEST_CASE("sigmoid symmetry and monotonicity") {
  for (double t = -30.0; t <= 30.0; t += 0.37) {
    CHECK(std::fabs(sigmoid(t) + sigmoid(-t) - 1.0) <= 1e-15);
  }
  double prev = sigmoid(-20.0);
  for (double t = -19.9; t <= 20.0; t += 0.1) {
    const double cur = sigmoid(t);
    CHECK(cur > prev);
    prev = cur;
  }
}

TEST_CASE("log1pexp stable on both tails") {
  CHECK(log1pexp(0.0) == Catch::Approx(std::log(2.0)).epsilon(1e-15));
  CHECK(log1pexp(-40.0) == Catch::Approx(std::exp(-40.0)).epsilon(1e-12));
  CHECK(log1pexp(800.0) == Catch::Approx(800.0).epsilon(1e-15));
  CHECK(std::isfinite(log1pexp(-800.0)));
}

TEST_CASE("jj coefficient: removable singularity") {
  CHECK(jj_coefficient(0.0) == 0.125);
  // Taylor control near zero
  for (double eta = 1e-12; eta <= 1e-3; eta *= 3.1) {
    CHECK(std::fabs(jj_coefficient(eta) - 0.125) <= eta * eta / 48.0 + 1e-12);
  }
  // continuity across the series switch at 1e-4
  const double below = jj_coefficient(0.99999e-4);
  const double above = jj_coefficient(1.00001e-4);
  CHECK(std::fabs(below - above) < 1e-14);
  // even function
  CHECK(jj_coefficient(-2.5) == jj_coefficient(2.5));
  CHECK(jj_coefficient(3.0) == Catch::Approx(std::tanh(1.5) / 12.0).epsilon(1e-15));
}

TEST_CASE("normal quantile inverts the cdf") {
  for (double p : {1e-12, 1e-6, 0.01, 0.025, 0.3, 0.5, 0.7, 0.975, 0.99,
                   1.0 - 1e-6}) {
    CHECK(norm_cdf(norm_ppf(p)) == Catch::Approx(p).epsilon(1e-11));
  }
  CHECK(norm_ppf(0.5) == Catch::Approx(0.0).margin(1e-15));
  CHECK(norm_ppf(0.975) == Catch::Approx(1.959963984540054).epsilon(1e-12));
}
