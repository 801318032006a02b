#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

#include "bullbear/densities.hpp"
#include "bullbear/model.hpp"
#include "bullbear/rng.hpp"

namespace bullbear {

struct SignalEvent {
  double time = 0.0;
  double mark = 0.0;
  int regime = 1;  // regime at the (exact) event time
};

// One simulated scenario on a uniform grid of step dt: the hidden regime at
// each node, the asset at each node, the Brownian increments, and the exact
// signal event list. Asset evolution is exact log-Euler with the drift
// integrated across regime switches inside a step.
struct WorldPath {
  double dt = 0.0;
  double horizon = 0.0;
  std::vector<int> alpha;          // size n_steps + 1
  std::vector<double> S;           // size n_steps + 1
  std::vector<double> dW;          // size n_steps
  std::vector<SignalEvent> events; // sorted by time

  std::size_t n_steps() const { return dW.size(); }
};

inline std::size_t grid_steps(double horizon, double dt) {
  if (!(dt > 0.0) || !(horizon > 0.0))
    throw std::invalid_argument("grid: horizon and dt must be positive");
  const auto n = static_cast<std::size_t>(std::llround(horizon / dt));
  if (n == 0 || std::abs(n * dt - horizon) > 1e-9 * std::max(1.0, horizon))
    throw std::invalid_argument("grid: dt must divide the horizon");
  return n;
}

namespace detail {

// Exact continuous-time switch times of the two-state chain on [0, horizon].
struct RegimePath {
  int initial = 1;
  std::vector<double> switch_times;

  int state_at(double t) const {
    // each switch flips the state
    const auto k = std::upper_bound(switch_times.begin(), switch_times.end(), t) -
                   switch_times.begin();
    return (k % 2 == 0) ? initial : 3 - initial;
  }
};

inline RegimePath simulate_regime(const RegimeParams& rp, double horizon, double p1_initial,
                                  std::mt19937_64& eng) {
  RegimePath path;
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  path.initial = (u01(eng) < p1_initial) ? 1 : 2;
  int state = path.initial;
  double t = 0.0;
  std::exponential_distribution<double> hold1(rp.a1), hold2(rp.a2);
  while (true) {
    t += (state == 1) ? hold1(eng) : hold2(eng);
    if (t >= horizon) break;
    path.switch_times.push_back(t);
    state = 3 - state;
  }
  return path;
}

// Integral of mu(alpha_u) over [t0, t1] given the exact switch times.
inline double drift_integral(const RegimePath& rp, const MarketParams& m, double t0, double t1) {
  double acc = 0.0;
  double t = t0;
  int state = rp.state_at(t0);
  auto it = std::upper_bound(rp.switch_times.begin(), rp.switch_times.end(), t0);
  while (it != rp.switch_times.end() && *it < t1) {
    acc += ((state == 1) ? m.mu1 : m.mu2) * (*it - t);
    t = *it;
    state = 3 - state;
    ++it;
  }
  acc += ((state == 1) ? m.mu1 : m.mu2) * (t1 - t);
  return acc;
}

}  // namespace detail

struct SimulationInputs {
  RegimeParams regime;
  MarketParams market;
  double lambda = 0.0;   // signal intensity
  double horizon = 1.0;
  double x0 = 0.5;       // filter start; also the default initial regime law
  double true_p0 = -1.0; // optional mismatched initial regime law; < 0 means "use x0"

  double initial_p1() const { return true_p0 >= 0.0 ? true_p0 : x0; }

  void validate() const {
    regime.validate();
    market.validate();
    if (!(lambda >= 0.0)) throw std::invalid_argument("signal: lambda must be >= 0");
    if (!(horizon > 0.0)) throw std::invalid_argument("horizon must be positive");
    if (!(x0 >= 0.0) || !(x0 <= 1.0)) throw std::invalid_argument("x0 must lie in [0, 1]");
    if (true_p0 >= 0.0 && !(true_p0 <= 1.0))
      throw std::invalid_argument("true_p0 must lie in [0, 1]");
  }
};

// Simulates one scenario. Substreams are keyed by (seed, stream, path_index):
// regime switches, Brownian increments, arrival times and marks never share
// draws, so e.g. changing lambda leaves the Brownian path untouched.
inline WorldPath simulate_world(const SimulationInputs& in, const SignalDensityPair& densities,
                                double dt, std::uint64_t seed, std::uint64_t path_index = 0) {
  in.validate();
  if (in.lambda * dt > 0.05)
    throw std::invalid_argument("simulate: lambda * dt must be <= 0.05");
  const std::size_t n = grid_steps(in.horizon, dt);

  auto regime_eng = make_engine(seed, Stream::regime, path_index);
  auto brownian_eng = make_engine(seed, Stream::brownian, path_index);
  auto arrival_eng = make_engine(seed, Stream::arrivals, path_index);
  auto mark_eng = make_engine(seed, Stream::marks, path_index);

  const auto regime = detail::simulate_regime(in.regime, in.horizon, in.initial_p1(), regime_eng);

  WorldPath w;
  w.dt = dt;
  w.horizon = in.horizon;
  w.alpha.resize(n + 1);
  for (std::size_t k = 0; k <= n; ++k) w.alpha[k] = regime.state_at(k * dt);

  w.dW.resize(n);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double sqdt = std::sqrt(dt);
  for (std::size_t k = 0; k < n; ++k) w.dW[k] = sqdt * gauss(brownian_eng);

  w.S.resize(n + 1);
  w.S[0] = 1.0;
  const double sig = in.market.sigma;
  for (std::size_t k = 0; k < n; ++k) {
    const double mu_int = detail::drift_integral(regime, in.market, k * dt, (k + 1) * dt);
    w.S[k + 1] = w.S[k] * std::exp(mu_int - 0.5 * sig * sig * dt + sig * w.dW[k]);
  }

  if (in.lambda > 0.0) {
    std::poisson_distribution<int> count(in.lambda * in.horizon);
    const int m = count(arrival_eng);
    std::uniform_real_distribution<double> utime(0.0, in.horizon);
    std::vector<double> times(m);
    for (int i = 0; i < m; ++i) times[i] = utime(arrival_eng);
    std::sort(times.begin(), times.end());
    w.events.reserve(m);
    for (double tau : times) {
      SignalEvent ev;
      ev.time = tau;
      ev.regime = regime.state_at(tau);
      ev.mark = (ev.regime == 1) ? densities.sample1(mark_eng) : densities.sample2(mark_eng);
      w.events.push_back(ev);
    }
  }
  return w;
}

}  // namespace bullbear
