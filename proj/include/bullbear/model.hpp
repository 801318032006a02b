#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

#include "bullbear/errors.hpp"

namespace bullbear {

// Two-state hidden regime: state 1 = bull, state 2 = bear.
// a1 is the rate of leaving state 1, a2 the rate of leaving state 2, so the
// generator is [[-a1, a1], [a2, -a2]] and the stationary weight of state 1
// is a2 / (a1 + a2).
struct RegimeParams {
  double a1 = 1.0;
  double a2 = 1.0;

  void validate() const {
    if (!(a1 > 0.0) || !(a2 > 0.0))
      throw std::invalid_argument("regime: switching rates a1, a2 must be positive");
  }

  double stationary_p1() const { return a2 / (a1 + a2); }
};

// Risky asset dS = mu(alpha) S dt + sigma S dW plus a bank account at rate r.
struct MarketParams {
  double mu1 = 0.08;
  double mu2 = 0.02;
  double sigma = 0.2;
  double r = 0.02;

  void validate() const {
    if (!(sigma > 0.0)) throw std::invalid_argument("market: sigma must be positive");
    if (!std::isfinite(mu1) || !std::isfinite(mu2) || !std::isfinite(r))
      throw std::invalid_argument("market: mu1, mu2, r must be finite");
  }

  double theta1() const { return (mu1 - r) / sigma; }
  double theta2() const { return (mu2 - r) / sigma; }
  // Largest market price of risk over the two regimes, used by value bounds.
  double theta_max_sq() const {
    const double t1 = theta1(), t2 = theta2();
    return std::max(t1 * t1, t2 * t2);
  }
};

// Power utility U(c) = c^kappa / kappa with kappa < 1, kappa != 0.
// beta = -kappa / (1 - kappa) is the exponent of the dual utility
// -y^beta / beta; kappa < 0 gives beta in (0,1), kappa in (0,1) gives beta < 0.
struct UtilityParams {
  double kappa = -1.0;

  void validate() const {
    if (!std::isfinite(kappa) || !(kappa < 1.0) || kappa == 0.0)
      throw std::invalid_argument("utility: kappa must satisfy kappa < 1, kappa != 0");
  }

  double beta() const { return -kappa / (1.0 - kappa); }
};

// Conditional market price of risk given P(state 1) = x.
inline double theta_hat(const MarketParams& m, double x) {
  if (!(x >= 0.0) || !(x <= 1.0))
    throw std::invalid_argument("theta_hat: x must lie in [0, 1]");
  return x * m.theta1() + (1.0 - x) * m.theta2();
}

// One consumption-investment problem instance: market and regime dynamics,
// signal arrival rate, horizon, initial filter state and initial wealth.
struct Problem {
  RegimeParams regime;
  MarketParams market;
  UtilityParams utility;
  double lambda = 2.0;   // signal arrival intensity
  double horizon = 1.0;  // T
  double x0 = 0.5;       // initial P(state 1)
  double v0 = 1.0;       // initial wealth

  void validate() const {
    regime.validate();
    market.validate();
    utility.validate();
    if (!(lambda >= 0.0) || !std::isfinite(lambda))
      throw std::invalid_argument("problem: lambda must be >= 0");
    if (!(horizon > 0.0) || !std::isfinite(horizon))
      throw std::invalid_argument("problem: horizon must be positive");
    if (!(x0 > 0.0) || !(x0 < 1.0))
      throw std::invalid_argument("problem: x0 must lie strictly inside (0, 1)");
    if (!(v0 > 0.0)) throw std::invalid_argument("problem: v0 must be positive");
  }
};

}  // namespace bullbear
