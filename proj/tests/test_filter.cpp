#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "bullbear/filter.hpp"
#include "helpers.hpp"

using namespace bullbear;

namespace {

SignalDensityPair informative_pair() {
  GaussianSpec g;
  g.mean1 = -1.0;
  g.var1 = 1.0 / 1.6;
  g.mean2 = 1.0;
  g.var2 = 0.5;
  return SignalDensityPair(g);
}

SignalDensityPair flat_pair() {
  GaussianSpec g;  // f1 == f2 == N(0,1)
  return SignalDensityPair(g);
}

SimulationInputs base_inputs() {
  SimulationInputs in;
  in.regime = {1.0, 1.0};
  in.market.mu1 = 0.08;
  in.market.mu2 = 0.02;
  in.market.sigma = 0.2;
  in.market.r = 0.02;
  in.lambda = 2.0;
  in.horizon = 1.0;
  in.x0 = 0.5;
  return in;
}

}  // namespace

TEST_CASE("filter diffusion step, frozen value") {
  // x=0.3, a1=a2=1, theta1-theta2=1.5, dt=0.01, dW~=0.1:
  // 0.3 + 0.4*0.01 + 0.3*0.7*1.5*0.1 = 0.3355
  REQUIRE(filter_step(0.3, 1.0, 1.0, 1.5, 0.01, 0.1) == Catch::Approx(0.3355).margin(1e-15));
}

TEST_CASE("posterior jump xi, frozen value") {
  // equal-mass tabulated pair with f1/f2 = 3 at z = 0
  TabulatedSpec t;
  t.grid = {0.0, 1.0};
  t.f1 = {1.5, 0.5};
  t.f2 = {0.5, 1.5};
  const SignalDensityPair p(t);
  REQUIRE(xi(p, 0.5, 0.0) == Catch::Approx(0.75).margin(1e-15));
}

TEST_CASE("xi boundary and identity properties") {
  const auto p = informative_pair();
  for (double z : {-2.0, 0.0, 1.5}) {
    REQUIRE(xi(p, 0.0, z) == 0.0);
    REQUIRE(xi(p, 1.0, z) == 1.0);
  }
  const auto flat = flat_pair();
  for (double x : {0.1, 0.3, 0.7}) {
    for (double z : {-1.0, 0.0, 2.0}) {
      REQUIRE(xi(flat, x, z) == Catch::Approx(x).margin(1e-15));
    }
  }
}

TEST_CASE("xi rejects marks outside both supports") {
  TabulatedSpec t;
  t.grid = {0.0, 1.0};
  t.f1 = {1.0, 1.0};
  t.f2 = {1.0, 1.0};
  const SignalDensityPair p(t);
  REQUIRE_THROWS_AS(xi(p, 0.5, 2.0), numerical_error);
}

TEST_CASE("mean filter curve, frozen value") {
  // a1=a2=1, x0=0.9, e^{-2t}=1/2: 0.9*0.5 + 0.5*0.5 = 0.7
  RegimeParams rp{1.0, 1.0};
  REQUIRE(mean_filter_ode(rp, 0.9, 0.5 * std::log(2.0)) == Catch::Approx(0.7).margin(1e-15));
  REQUIRE(mean_filter_ode(rp, 0.9, 0.0) == Catch::Approx(0.9).margin(1e-15));
}

TEST_CASE("uninformative observations reduce the filter to the mean curve") {
  auto in = base_inputs();
  in.market.mu1 = in.market.mu2 = 0.05;  // theta1 == theta2
  in.lambda = 0.0;
  in.x0 = 0.9;
  const auto pair = flat_pair();
  const double dt = 1e-3;
  const auto w = simulate_world(in, pair, dt, 3, 0);
  const auto fp = run_filter(w, in.regime, in.market, pair, in.x0);
  // pure Euler of the linear mean equation; O(dt) agreement
  for (std::size_t k = 0; k <= w.n_steps(); k += 100) {
    REQUIRE(fp.pi[k] == Catch::Approx(mean_filter_ode(in.regime, 0.9, k * dt)).margin(2e-3));
  }
}

TEST_CASE("sample mean of the filter tracks the mean curve") {
  auto in = base_inputs();
  const auto pair = informative_pair();
  in.x0 = 0.9;
  const int paths = 2000;
  const double dt = 2e-3;
  std::vector<double> pi_T(paths);
  for (int i = 0; i < paths; ++i) {
    const auto w = simulate_world(in, pair, dt, 1234, i);
    pi_T[i] = run_filter(w, in.regime, in.market, pair, in.x0).pi.back();
  }
  const auto ms = testutil::mean_stderr(pi_T);
  const double target = mean_filter_ode(in.regime, in.x0, in.horizon);
  REQUIRE(std::abs(ms.mean - target) < 3.0 * ms.stderr_ + 2.0 * dt);
}

TEST_CASE("filter stays strictly inside the unit interval") {
  auto in = base_inputs();
  in.market.mu1 = 0.5;  // large theta spread stresses the diffusion term
  in.lambda = 4.0;
  const auto pair = informative_pair();
  for (int i = 0; i < 200; ++i) {
    const auto w = simulate_world(in, pair, 0.01, 77, i);
    const auto fp = run_filter(w, in.regime, in.market, pair, 0.5);
    for (double x : fp.pi) {
      REQUIRE(x >= kProbClamp);
      REQUIRE(x <= 1.0 - kProbClamp);
    }
  }
}

TEST_CASE("stored post-jump values equal xi(pre, mark) exactly") {
  auto in = base_inputs();
  in.lambda = 5.0;
  const auto pair = informative_pair();
  int jumps_seen = 0;
  for (int i = 0; i < 50; ++i) {
    const auto w = simulate_world(in, pair, 0.01, 42, i);
    const auto fp = run_filter(w, in.regime, in.market, pair, 0.5);
    REQUIRE(fp.jumps.size() == w.events.size());
    for (const auto& j : fp.jumps) {
      REQUIRE(j.post == xi(pair, j.pre, j.mark));
      REQUIRE(fp.pi[j.node] >= kProbClamp);
      ++jumps_seen;
    }
  }
  REQUIRE(jumps_seen > 100);
}

TEST_CASE("informative signals shrink the regime-estimation error (paired seeds)") {
  auto in = base_inputs();
  const auto pair = informative_pair();
  const int paths = 5000;
  const double dt = 2e-3;
  std::vector<double> diff(paths);
  for (int i = 0; i < paths; ++i) {
    auto err = [&](double lambda) {
      auto inputs = in;
      inputs.lambda = lambda;
      const auto w = simulate_world(inputs, pair, dt, 2024, i);
      const auto fp = run_filter(w, inputs.regime, inputs.market, pair, inputs.x0);
      double acc = 0.0;
      for (std::size_t k = 0; k <= w.n_steps(); ++k) {
        const double ind = (w.alpha[k] == 1) ? 1.0 : 0.0;
        acc += std::abs(ind - fp.pi[k]);
      }
      return acc / static_cast<double>(w.n_steps() + 1);
    };
    diff[i] = err(2.0) - err(0.0);
  }
  const auto ms = testutil::mean_stderr(diff);
  REQUIRE(ms.mean < 0.0);
  REQUIRE(std::abs(ms.mean) > 3.0 * ms.stderr_);
}

TEST_CASE("run_filter rejects degenerate starts") {
  const auto in = base_inputs();
  const auto pair = informative_pair();
  const auto w = simulate_world(in, pair, 0.01, 1, 0);
  REQUIRE_THROWS_AS(run_filter(w, in.regime, in.market, pair, 0.0), std::invalid_argument);
  REQUIRE_THROWS_AS(run_filter(w, in.regime, in.market, pair, 1.0), std::invalid_argument);
}
