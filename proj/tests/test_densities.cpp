#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "bullbear/densities.hpp"
#include "helpers.hpp"

using namespace bullbear;

namespace {

SignalDensityPair informative_gaussian() {
  // f1 = N(-1, 1/1.6), f2 = N(1, 1/2)
  GaussianSpec g;
  g.mean1 = -1.0;
  g.var1 = 1.0 / 1.6;
  g.mean2 = 1.0;
  g.var2 = 0.5;
  return SignalDensityPair(g);
}

SignalDensityPair power_exp_vs_gamma() {
  MixtureGammaSpec s;
  s.shape = 0.5;
  s.weight = 0.5;
  return SignalDensityPair(s);
}

SignalDensityPair triangle_tabulated() {
  TabulatedSpec t;
  t.grid = {0.0, 0.5, 1.0};
  t.f1 = {0.0, 2.0, 0.0};
  t.f2 = {2.0, 0.0, 2.0};
  return SignalDensityPair(t);
}

}  // namespace

TEST_CASE("mark quadrature normalizes every family") {
  auto check = [](const SignalDensityPair& p) {
    const auto q = make_mark_quadrature(p, 128);
    REQUIRE(q.integrate([&](double z) { return p.pdf1(z); }) == Catch::Approx(1.0).margin(1e-9));
    REQUIRE(q.integrate([&](double z) { return p.pdf2(z); }) == Catch::Approx(1.0).margin(1e-9));
  };
  check(informative_gaussian());
  check(power_exp_vs_gamma());
  check(triangle_tabulated());

  GaussianMixtureSpec gm;
  gm.weights = {0.7, 0.3};
  gm.means = {0.0, 1.0};
  gm.vars = {1.0, 1.0};
  gm.mean2 = 0.5;
  gm.var2 = 2.0;
  check(SignalDensityPair(gm));
}

TEST_CASE("truncated support is conservative") {
  const auto p = informative_gaussian();
  const auto box = p.truncated_support(1e-12);
  REQUIRE(p.cdf1(box.lo) <= 1e-12);
  REQUIRE(p.cdf2(box.lo) <= 1e-12);
  REQUIRE(1.0 - p.cdf1(box.hi) <= 1e-12);
  REQUIRE(1.0 - p.cdf2(box.hi) <= 1e-12);

  const auto g = power_exp_vs_gamma();
  const auto gbox = g.truncated_support(1e-12);
  REQUIRE(gbox.lo > 0.0);
  REQUIRE(g.cdf1(gbox.lo) <= 1.1e-12);
  REQUIRE(g.cdf2(gbox.lo) <= 1.1e-12);
  REQUIRE(1.0 - g.cdf1(gbox.hi) <= 1.1e-12);
  REQUIRE(1.0 - g.cdf2(gbox.hi) <= 1.1e-12);
}

TEST_CASE("cdf matches integrated pdf") {
  const auto p = power_exp_vs_gamma();
  GaussLegendre gl(8);
  auto increment = [&](double a, double b, bool first) {
    CompositeQuadrature q;
    q.add_uniform(gl, a, b, 16);
    return q.integrate([&](double z) { return first ? p.pdf1(z) : p.pdf2(z); });
  };
  REQUIRE(increment(0.25, 0.9, true) == Catch::Approx(p.cdf1(0.9) - p.cdf1(0.25)).margin(1e-10));
  REQUIRE(increment(1.1, 4.0, true) == Catch::Approx(p.cdf1(4.0) - p.cdf1(1.1)).margin(1e-10));
  REQUIRE(increment(0.25, 0.9, false) == Catch::Approx(p.cdf2(0.9) - p.cdf2(0.25)).margin(1e-10));
  REQUIRE(increment(1.1, 4.0, false) == Catch::Approx(p.cdf2(4.0) - p.cdf2(1.1)).margin(1e-10));
  // exact checks at the kink and in the far tail
  REQUIRE(p.cdf1(1.0) == Catch::Approx(0.5).margin(1e-12));
  REQUIRE(p.cdf2(1e9) == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("sampling agrees with the cdf (KS at 1%)") {
  std::mt19937_64 eng(20240811);
  auto ks_check = [&](const SignalDensityPair& p, bool first) {
    const int n = 10000;
    std::vector<double> s(n);
    for (int i = 0; i < n; ++i) s[i] = first ? p.sample1(eng) : p.sample2(eng);
    const double d = testutil::ks_statistic(
        s, [&](double z) { return first ? p.cdf1(z) : p.cdf2(z); });
    REQUIRE(d < 1.63 / std::sqrt(static_cast<double>(n)));
  };
  ks_check(informative_gaussian(), true);
  ks_check(informative_gaussian(), false);
  ks_check(power_exp_vs_gamma(), true);
  ks_check(power_exp_vs_gamma(), false);
  ks_check(triangle_tabulated(), true);
  ks_check(triangle_tabulated(), false);
}

TEST_CASE("identical detection") {
  GaussianSpec g;
  g.mean1 = g.mean2 = 0.0;
  g.var1 = g.var2 = 1.0;
  REQUIRE(SignalDensityPair(g).identical());
  g.mean2 = 1.0;
  REQUIRE_FALSE(SignalDensityPair(g).identical());
  REQUIRE_FALSE(power_exp_vs_gamma().identical());

  TabulatedSpec t;
  t.grid = {0.0, 1.0};
  t.f1 = {1.0, 1.0};
  t.f2 = {2.0, 2.0};  // renormalizes to the same density
  REQUIRE(SignalDensityPair(t).identical());
}

TEST_CASE("tabulated densities renormalize at construction") {
  TabulatedSpec t;
  t.grid = {0.0, 1.0};
  t.f1 = {3.0, 3.0};
  t.f2 = {1.0, 1.0};
  const SignalDensityPair p(t);
  REQUIRE(p.pdf1(0.5) == Catch::Approx(1.0).margin(1e-12));
  REQUIRE(p.pdf2(0.5) == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("spec validation rejects malformed input") {
  GaussianSpec g;
  g.var1 = 0.0;
  REQUIRE_THROWS_AS(SignalDensityPair(g), std::invalid_argument);

  MixtureGammaSpec mg;
  mg.shape = 1.5;
  REQUIRE_THROWS_AS(SignalDensityPair(mg), std::invalid_argument);

  TabulatedSpec t;
  t.grid = {0.0, 0.0, 1.0};
  t.f1 = {1.0, 1.0, 1.0};
  t.f2 = {1.0, 1.0, 1.0};
  REQUIRE_THROWS_AS(SignalDensityPair(t), std::invalid_argument);

  TabulatedSpec neg;
  neg.grid = {0.0, 1.0};
  neg.f1 = {1.0, -0.5};
  neg.f2 = {1.0, 1.0};
  REQUIRE_THROWS_AS(SignalDensityPair(neg), std::invalid_argument);
}
