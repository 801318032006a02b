#include <catch2/catch_amalgamated.hpp>

#include "bullbear/model.hpp"

using namespace bullbear;

TEST_CASE("theta_hat mixes the regime market prices of risk") {
  MarketParams m;
  m.mu1 = 0.08;
  m.mu2 = 0.02;
  m.sigma = 0.2;
  m.r = 0.02;
  REQUIRE(m.theta1() == Catch::Approx(0.3).margin(1e-15));
  REQUIRE(m.theta2() == Catch::Approx(0.0).margin(1e-15));
  // Frozen: 0.5 * 0.3 + 0.5 * 0.0
  REQUIRE(theta_hat(m, 0.5) == Catch::Approx(0.15).margin(1e-15));
  REQUIRE(theta_hat(m, 0.0) == Catch::Approx(0.0).margin(1e-15));
  REQUIRE(theta_hat(m, 1.0) == Catch::Approx(0.3).margin(1e-15));
  REQUIRE(m.theta_max_sq() == Catch::Approx(0.09).margin(1e-15));
}

TEST_CASE("theta_hat rejects probabilities outside [0,1]") {
  MarketParams m;
  REQUIRE_THROWS_AS(theta_hat(m, -0.01), std::invalid_argument);
  REQUIRE_THROWS_AS(theta_hat(m, 1.01), std::invalid_argument);
}

TEST_CASE("dual exponent beta") {
  UtilityParams u;
  u.kappa = -1.0;
  REQUIRE(u.beta() == Catch::Approx(0.5).margin(1e-15));
  u.kappa = 0.5;
  REQUIRE(u.beta() == Catch::Approx(-1.0).margin(1e-15));
  // kappa < 0 puts beta in (0,1); kappa in (0,1) makes beta negative
  for (double k : {-5.0, -0.5, -0.01}) {
    u.kappa = k;
    REQUIRE(u.beta() > 0.0);
    REQUIRE(u.beta() < 1.0);
  }
  for (double k : {0.01, 0.5, 0.99}) {
    u.kappa = k;
    REQUIRE(u.beta() < 0.0);
  }
}

TEST_CASE("parameter validation") {
  RegimeParams rp;
  rp.a1 = 0.0;
  REQUIRE_THROWS_AS(rp.validate(), std::invalid_argument);
  MarketParams mp;
  mp.sigma = -1.0;
  REQUIRE_THROWS_AS(mp.validate(), std::invalid_argument);
  UtilityParams up;
  up.kappa = 0.0;
  REQUIRE_THROWS_AS(up.validate(), std::invalid_argument);
  up.kappa = 1.0;
  REQUIRE_THROWS_AS(up.validate(), std::invalid_argument);
  up.kappa = 1.5;
  REQUIRE_THROWS_AS(up.validate(), std::invalid_argument);
}

TEST_CASE("stationary regime weight") {
  RegimeParams rp;
  rp.a1 = 1.0;
  rp.a2 = 3.0;
  REQUIRE(rp.stationary_p1() == Catch::Approx(0.75).margin(1e-15));
}
