#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "bullbear/densities.hpp"
#include "bullbear/errors.hpp"
#include "bullbear/model.hpp"
#include "bullbear/simulate.hpp"

namespace bullbear {

// Probabilities are kept strictly inside (0, 1); fractional powers and the
// mark-mixture ratio stay well defined at this distance from the endpoints.
inline constexpr double kProbClamp = 1e-9;

inline double clamp_prob(double x) {
  return std::clamp(x, kProbClamp, 1.0 - kProbClamp);
}

// Mixture mark density under filter value x.
inline double f_hat(const SignalDensityPair& d, double x, double z) {
  return x * d.pdf1(z) + (1.0 - x) * d.pdf2(z);
}

// Posterior regime-1 probability right after observing mark z at filter
// value x (Bayes update of the mark likelihoods).
inline double xi(const SignalDensityPair& d, double x, double z) {
  const double p1 = d.pdf1(z), p2 = d.pdf2(z);
  const double den = x * p1 + (1.0 - x) * p2;
  if (!(den > 0.0))
    throw numerical_error("xi: mark lies outside the support of both densities");
  return x * p1 / den;
}

// One Euler step of the filter diffusion between signal events:
// dpi = (a2 - (a1+a2) pi) dt + pi (1-pi) (theta1 - theta2) dW~.
inline double filter_step(double x, double a1, double a2, double theta_diff, double dt,
                          double dW_tilde) {
  const double drift = a2 - (a1 + a2) * x;
  const double diff = x * (1.0 - x) * theta_diff;
  return clamp_prob(x + drift * dt + diff * dW_tilde);
}

// E[pi_t] when started from x0: the chain's one-dimensional forward equation,
// x0 e^{-(a1+a2) t} + a2/(a1+a2) (1 - e^{-(a1+a2) t}).
inline double mean_filter_ode(const RegimeParams& rp, double x0, double t) {
  const double a = rp.a1 + rp.a2;
  const double decay = std::exp(-a * t);
  return x0 * decay + rp.a2 / a * (1.0 - decay);
}

struct FilterJump {
  std::size_t node = 0;  // grid node the update was applied at
  double time = 0.0;     // exact event time
  double pre = 0.0;      // value just before the update
  double mark = 0.0;
  double post = 0.0;     // xi(pre, mark)
};

struct FilterPath {
  std::vector<double> pi;           // size n_steps + 1, post-jump values
  std::vector<double> innovations;  // dW~ per step, size n_steps
  std::vector<FilterJump> jumps;
};

// Runs the filter along an observed path. Only observables enter: asset
// returns (through the innovation) and signal events. A signal at time tau in
// (t_k, t_{k+1}] is applied at node k+1, after that step's diffusion update.
inline FilterPath run_filter(const WorldPath& w, const RegimeParams& rp, const MarketParams& m,
                             const SignalDensityPair& densities, double x0) {
  if (!(x0 > 0.0) || !(x0 < 1.0))
    throw std::invalid_argument("run_filter: x0 must lie strictly inside (0, 1)");
  const std::size_t n = w.n_steps();
  const double dt = w.dt;
  const double theta_diff = m.theta1() - m.theta2();

  FilterPath fp;
  fp.pi.resize(n + 1);
  fp.innovations.resize(n);
  fp.pi[0] = x0;

  std::size_t next_event = 0;
  for (std::size_t k = 0; k < n; ++k) {
    const double x = fp.pi[k];
    const double ret = (w.S[k + 1] - w.S[k]) / w.S[k];
    const double dwt = (ret - m.r * dt) / m.sigma - theta_hat(m, x) * dt;
    fp.innovations[k] = dwt;
    double next = filter_step(x, rp.a1, rp.a2, theta_diff, dt, dwt);
    // events with ceil(time/dt) == k+1 land on this node, in time order
    while (next_event < w.events.size() &&
           w.events[next_event].time <= (k + 1) * dt + 1e-12 * dt) {
      FilterJump j;
      j.node = k + 1;
      j.time = w.events[next_event].time;
      j.pre = next;
      j.mark = w.events[next_event].mark;
      j.post = xi(densities, next, j.mark);
      next = clamp_prob(j.post);
      fp.jumps.push_back(j);
      ++next_event;
    }
    fp.pi[k + 1] = next;
  }
  return fp;
}

}  // namespace bullbear
