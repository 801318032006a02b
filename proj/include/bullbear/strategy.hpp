#pragma once

#include <cmath>
#include <stdexcept>

#include "bullbear/model.hpp"
#include "bullbear/pide.hpp"
#include "bullbear/surface.hpp"

namespace bullbear {

// Primal/dual value algebra and the feedback strategy fields derived from a
// solved surface.

// Dual objective -(y^beta / beta) Lambda(t, x).
inline double dual_value(double y, double beta, double lambda_value) {
  if (!(y > 0.0)) throw std::invalid_argument("dual_value: multiplier y must be positive");
  return -(std::pow(y, beta) / beta) * lambda_value;
}

inline double dual_value(const ValueSurface& s, double t, double x, double y,
                         const UtilityParams& u) {
  return dual_value(y, u.beta(), s.value(t, x));
}

// Multiplier solving -d(dual)/dy = v: y* = (v / Lambda)^(kappa - 1).
inline double y_star(double v, double kappa, double lambda_value) {
  if (!(v > 0.0)) throw std::invalid_argument("y_star: wealth v must be positive");
  return std::pow(v / lambda_value, kappa - 1.0);
}

inline double y_star(double v, const ValueSurface& s, double t, double x,
                     const UtilityParams& u) {
  return y_star(v, u.kappa, s.value(t, x));
}

// Value of the consumption-investment problem: (1/kappa) v^kappa Lambda^(1-kappa).
inline double primal_value(double v, double kappa, double lambda_value) {
  if (!(v > 0.0)) throw std::invalid_argument("primal_value: wealth v must be positive");
  return std::pow(v, kappa) * std::pow(lambda_value, 1.0 - kappa) / kappa;
}

inline double primal_value(double v, const ValueSurface& s, double t, double x,
                           const UtilityParams& u) {
  return primal_value(v, u.kappa, s.value(t, x));
}

// Optimal wealth as a multiple of initial wealth, given the realized
// discounted dual state z_factor = e^{-r(s-t)} Z_s.
inline double wealth_factor(double z_factor, double beta, double lambda_s, double lambda_t) {
  if (!(z_factor > 0.0)) throw std::invalid_argument("wealth_factor: z_factor must be positive");
  return std::pow(z_factor, beta - 1.0) * lambda_s / lambda_t;
}

struct Controls {
  double invest = 0.0;   // amount in the risky asset
  double consume = 0.0;  // consumption rate
};

// Feedback gains per unit wealth. The investment gain is the replicating
// loading of the optimal wealth: matching diffusion terms in Ito's formula,
// the value surface contributes through the filter's own volatility, so the
// log-derivative term carries a sigma_bar(x) factor:
//   invest/v = [ (1 - beta) theta_hat(x) + sigma_bar(x) d_x Lambda / Lambda ] / sigma,
//   consume/v = 1 / Lambda(t, x).
// The log-derivative is tabulated on the grid (central differences inside,
// one-sided at the edges) and interpolated bilinearly.
class StrategyField {
 public:
  explicit StrategyField(const LambdaSolution& sol)
      : market_(sol.problem.market),
        beta_(sol.problem.utility.beta()),
        lam_(sol.surface),
        slope_(sol.surface.nt(), sol.surface.nx(), sol.surface.horizon()) {
    const int nt = lam_.nt(), nx = lam_.nx();
    const double dx = lam_.dx();
    for (int it = 0; it <= nt; ++it) {
      const double* row = lam_.slice(it);
      slope_.at(it, 0) = (row[1] - row[0]) / dx / row[0];
      for (int j = 1; j < nx - 1; ++j)
        slope_.at(it, j) = (row[j + 1] - row[j - 1]) / (2.0 * dx) / row[j];
      slope_.at(it, nx - 1) = (row[nx - 1] - row[nx - 2]) / dx / row[nx - 1];
    }
  }

  const ValueSurface& surface() const { return lam_; }

  // investment amount per unit wealth
  double invest_fraction(double t, double x) const {
    return ((1.0 - beta_) * theta_hat(market_, x) + sigma_bar(market_, x) * slope_.value(t, x)) /
           market_.sigma;
  }

  // consumption rate per unit wealth
  double consume_fraction(double t, double x) const { return 1.0 / lam_.value(t, x); }

  Controls controls(double t, double x, double v) const {
    if (!(v >= 0.0)) throw std::invalid_argument("controls: wealth must be nonnegative");
    return {v * invest_fraction(t, x), v * consume_fraction(t, x)};
  }

 private:
  MarketParams market_;
  double beta_;
  ValueSurface lam_;
  ValueSurface slope_;  // d_x Lambda / Lambda at the nodes
};

}  // namespace bullbear
