#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numeric>

#include "bullbear/simulate.hpp"
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

TEST_CASE("discounted asset is a martingale when both regimes share the drift") {
  auto in = base_inputs();
  in.market.mu1 = in.market.mu2 = 0.06;
  in.lambda = 0.0;
  const auto pair = informative_pair();
  const int paths = 50000;
  const double dt = 1.0 / 32.0;
  std::vector<double> discounted(paths);
  for (int i = 0; i < paths; ++i) {
    const auto w = simulate_world(in, pair, dt, 91, i);
    discounted[i] = std::exp(-0.06 * in.horizon) * w.S.back();
  }
  const auto ms = testutil::mean_stderr(discounted);
  REQUIRE(std::abs(ms.mean - 1.0) < 3.0 * ms.stderr_);
}

TEST_CASE("regime-1 occupancy matches the stationary weight") {
  auto in = base_inputs();
  in.regime = {1.0, 3.0};
  in.x0 = 0.75;  // start from the stationary law
  in.lambda = 0.0;
  in.horizon = 2.0;
  const auto pair = informative_pair();
  const int paths = 5000;
  const double dt = 0.01;
  std::vector<double> occ(paths);
  for (int i = 0; i < paths; ++i) {
    const auto w = simulate_world(in, pair, dt, 17, i);
    double frac = 0.0;
    for (std::size_t k = 0; k < w.n_steps(); ++k) frac += (w.alpha[k] == 1) ? 1.0 : 0.0;
    occ[i] = frac / static_cast<double>(w.n_steps());
  }
  const auto ms = testutil::mean_stderr(occ);
  REQUIRE(std::abs(ms.mean - 0.75) < 3.0 * ms.stderr_);
}

TEST_CASE("signal count is Poisson(lambda * horizon)") {
  auto in = base_inputs();
  in.lambda = 2.0;
  const auto pair = informative_pair();
  const int paths = 10000;
  std::vector<double> counts(paths);
  for (int i = 0; i < paths; ++i)
    counts[i] = static_cast<double>(simulate_world(in, pair, 0.01, 7, i).events.size());
  const auto ms = testutil::mean_stderr(counts);
  REQUIRE(std::abs(ms.mean - 2.0) < 3.0 * ms.stderr_);
}

TEST_CASE("marks given a pinned regime follow that regime's density") {
  auto in = base_inputs();
  in.regime = {1e-9, 10.0};  // leaving state 1 is essentially impossible
  in.x0 = 1.0;               // initial regime = 1 with probability one
  in.lambda = 5.0;
  const auto pair = informative_pair();
  std::vector<double> marks;
  for (int i = 0; static_cast<int>(marks.size()) < 10000; ++i) {
    const auto w = simulate_world(in, pair, 0.01, 23, i);
    for (const auto& ev : w.events) {
      REQUIRE(ev.regime == 1);
      marks.push_back(ev.mark);
    }
  }
  marks.resize(10000);
  const double d = testutil::ks_statistic(marks, [&](double z) { return pair.cdf1(z); });
  REQUIRE(d < 1.63 / std::sqrt(10000.0));
}

TEST_CASE("substreams keep the Brownian path fixed when lambda changes") {
  auto in = base_inputs();
  const auto pair = informative_pair();
  const auto w1 = simulate_world(in, pair, 0.01, 5, 3);
  in.lambda = 0.0;
  const auto w0 = simulate_world(in, pair, 0.01, 5, 3);
  REQUIRE(w1.dW == w0.dW);
  REQUIRE(w1.alpha == w0.alpha);
  REQUIRE(w1.S == w0.S);
  REQUIRE(w0.events.empty());
  REQUIRE_FALSE(w1.events.empty());
}

TEST_CASE("same seed reproduces the path bit for bit") {
  const auto in = base_inputs();
  const auto pair = informative_pair();
  const auto a = simulate_world(in, pair, 0.01, 99, 1);
  const auto b = simulate_world(in, pair, 0.01, 99, 1);
  REQUIRE(a.S == b.S);
  REQUIRE(a.dW == b.dW);
  REQUIRE(a.alpha == b.alpha);
  REQUIRE(a.events.size() == b.events.size());
  for (std::size_t i = 0; i < a.events.size(); ++i) {
    REQUIRE(a.events[i].time == b.events[i].time);
    REQUIRE(a.events[i].mark == b.events[i].mark);
  }
}

TEST_CASE("simulation input validation") {
  auto in = base_inputs();
  const auto pair = informative_pair();
  in.lambda = 10.0;
  REQUIRE_THROWS_AS(simulate_world(in, pair, 0.01, 1, 0),
                    std::invalid_argument);  // lambda * dt > 0.05
  in = base_inputs();
  REQUIRE_THROWS_AS(simulate_world(in, pair, 0.3, 1, 0),
                    std::invalid_argument);  // dt does not divide horizon
  in.x0 = 1.5;
  REQUIRE_THROWS_AS(simulate_world(in, pair, 0.01, 1, 0), std::invalid_argument);
}
