#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "bullbear/densities.hpp"
#include "bullbear/errors.hpp"
#include "bullbear/filter.hpp"
#include "bullbear/model.hpp"
#include "bullbear/surface.hpp"

namespace bullbear {

// Dual value solver. The auxiliary value Lambda(t, x) solves, backward from
// the terminal slice Lambda(T, .) = 1,
//
//   dLambda/dt + mu_bar dLambda/dx + (1/2) sigma_bar^2 d2Lambda/dx2
//     - d0 Lambda + J[Lambda] + 1 = 0,
//
// where J is the nonlocal signal-update term defined below. The marching is
// IMEX: drift, diffusion and the zeroth-order discount are implicit
// (tridiagonal solve), the nonlocal term and the constant source explicit.

// Values this small mean the solve lost positivity; everything downstream
// takes logs and fractional powers of the surface.
inline constexpr double kValueFloor = 1e-12;

inline double sigma_bar(const MarketParams& m, double x) {
  return x * (1.0 - x) * (m.theta1() - m.theta2());
}

inline double mu_bar(const RegimeParams& rg, const MarketParams& m, double beta, double x) {
  return rg.a2 - (rg.a1 + rg.a2) * x - beta * sigma_bar(m, x) * theta_hat(m, x);
}

// Zeroth-order coefficient. The default discounts by the squared conditional
// market price of risk; linear_theta switches to a plain theta_hat factor
// (an alternative convention kept behind a flag; the value bounds below are
// only guaranteed for the default).
inline double d_zero(const MarketParams& m, double beta, double x, bool linear_theta = false) {
  const double th = theta_hat(m, x);
  return beta * m.r + 0.5 * beta * (1.0 - beta) * (linear_theta ? th : th * th);
}

// Exponential growth rate entering the value envelope.
inline double growth_rate(const MarketParams& m, double beta) {
  return m.r + 0.5 * (1.0 - beta) * m.theta_max_sq();
}

struct Envelope {
  double lo = 0.0, hi = 0.0;
};

// Provable envelope for Lambda at time-to-go tau: between (1 + tau) and
// e^{-beta c tau} (1 + tau), the ordering depending on the sign of beta.
// Both sides collapse to 1 at tau = 0, matching the terminal condition.
inline Envelope lambda_envelope(const MarketParams& m, double beta, double tau) {
  const double grown = std::exp(-beta * growth_rate(m, beta) * tau) * (1.0 + tau);
  const double plain = 1.0 + tau;
  if (beta > 0.0) return {grown, plain};
  return {plain, grown};
}

// Any reachable log-ratio of surface values at one time is bounded by
// log(hi/lo) of the envelope at tau = T, so this clamp can never bind on a
// correct solve; it exists to stop a corrupted surface from feeding huge
// exponents into the nonlocal term. Activations are counted and expected
// to stay exactly zero.
inline double default_m_clamp(const MarketParams& m, double beta, double horizon) {
  return std::abs(beta) * growth_rate(m, beta) * horizon / (1.0 - beta) * 1.05;
}

// Optimal dual jump control at a signal: the fractional-power log-ratio of
// the surface across the Bayes update of the filter state.
inline double nu_hat_value(double lambda_at_xi, double lambda_at_x, double beta, double m_clamp,
                           long* clamp_count = nullptr) {
  if (!(lambda_at_xi > kValueFloor) || !(lambda_at_x > kValueFloor))
    throw numerical_error("nu_hat: surface value lost positivity");
  const double rel = (lambda_at_xi - lambda_at_x) / lambda_at_x;
  double nu = std::log1p(rel) / (1.0 - beta);
  if (nu > m_clamp || nu < -m_clamp) {
    if (clamp_count) ++*clamp_count;
    nu = std::clamp(nu, -m_clamp, m_clamp);
  }
  return nu;
}

// Surface-interpolated nu_hat at an arbitrary state and mark (used on
// simulated signal events).
inline double nu_hat(const ValueSurface& lam, const SignalDensityPair& pair, double beta,
                     double m_clamp, double t, double x, double z,
                     long* clamp_count = nullptr) {
  const double post = xi(pair, x, z);
  return nu_hat_value(lam.value(t, post), lam.value(t, x), beta, m_clamp, clamp_count);
}

// Mark-integral geometry frozen on the x grid: quadrature nodes against both
// densities, and for every (grid node, quadrature node) pair the mixture
// density f_hat and the linear-interpolation coordinates of the Bayes update
// xi. None of it depends on time, so one table serves every slice of the
// solve and every tabulated field the Monte Carlo verifier needs.
struct MarkTable {
  int nx = 0;
  int n_nodes = 0;               // actual quadrature size
  std::vector<double> w;         // n_nodes
  std::vector<double> z;         // n_nodes
  std::vector<double> f1v, f2v;  // n_nodes
  std::vector<double> fhat;      // nx * n_nodes, zero where both densities vanish
  std::vector<double> xi_val;    // nx * n_nodes
  std::vector<int> cell;         // nx * n_nodes
  std::vector<double> frac;      // nx * n_nodes

  size_t idx(int j, int q) const { return size_t(j) * n_nodes + q; }
};

inline MarkTable make_mark_table(const SignalDensityPair& pair, const std::vector<double>& xgrid,
                                 int n_q, double tail_eps = 1e-12) {
  const auto quad = make_mark_quadrature(pair, n_q, tail_eps);
  MarkTable tab;
  tab.nx = static_cast<int>(xgrid.size());
  tab.n_nodes = static_cast<int>(quad.nodes.size());
  tab.w = quad.weights;
  tab.z = quad.nodes;
  tab.f1v.resize(tab.n_nodes);
  tab.f2v.resize(tab.n_nodes);
  const size_t total = size_t(tab.nx) * tab.n_nodes;
  tab.fhat.assign(total, 0.0);
  tab.xi_val.assign(total, 0.0);
  tab.cell.assign(total, 0);
  tab.frac.assign(total, 0.0);
  for (int q = 0; q < tab.n_nodes; ++q) {
    tab.f1v[q] = pair.pdf1(tab.z[q]);
    tab.f2v[q] = pair.pdf2(tab.z[q]);
  }
  const int cells = tab.nx - 1;
  for (int j = 0; j < tab.nx; ++j) {
    const double x = xgrid[j];
    for (int q = 0; q < tab.n_nodes; ++q) {
      const size_t k = tab.idx(j, q);
      const double num = x * tab.f1v[q];
      const double den = num + (1.0 - x) * tab.f2v[q];
      if (!(den > 0.0)) continue;  // fhat stays 0: the mark cannot occur from x
      const double post = std::clamp(num / den, 0.0, 1.0);
      tab.fhat[k] = den;
      tab.xi_val[k] = post;
      int c = std::min(int(post * cells), cells - 1);
      tab.cell[k] = c;
      tab.frac[k] = post * cells - c;
    }
  }
  return tab;
}

// Nonlocal term on one slice:
//   J[L](x) = (1 - beta) lambda L(x) int [ e^{nu_hat} - 1 ] f_hat(x, z) dz,
// with nu_hat = log(L(xi)/L(x)) / (1 - beta). Written as a function of the
// value ratio it vanishes identically on flat slices, rounding included.
inline void i_beta_slice(const double* lam, const MarkTable& tab, double beta, double lambda,
                         double m_clamp, double* out, long& clamp_count) {
  const double scale = (1.0 - beta) * lambda;
  for (int j = 0; j < tab.nx; ++j) {
    const double base = lam[j];
    if (!(base > kValueFloor))
      throw numerical_error("i_beta: surface value lost positivity");
    double acc = 0.0;
    for (int q = 0; q < tab.n_nodes; ++q) {
      const size_t k = tab.idx(j, q);
      const double fh = tab.fhat[k];
      if (fh == 0.0) continue;
      const int c = tab.cell[k];
      const double at_xi = lam[c] + tab.frac[k] * (lam[c + 1] - lam[c]);
      const double nu = nu_hat_value(at_xi, base, beta, m_clamp, &clamp_count);
      acc += tab.w[q] * fh * std::expm1(nu);
    }
    out[j] = scale * base * acc;
  }
}

struct PideConfig {
  int nx = 101;
  int nt = 2000;
  int n_q = 128;
  double tail_eps = 1e-12;
  double m_clamp = 0.0;          // <= 0 selects default_m_clamp
  bool d0_linear_theta = false;  // alternative zeroth-order convention
  double bound_slack = 1e-6;     // tolerance for the envelope check
  bool check_bounds = true;
};

namespace detail {

// Tridiagonal solve (Thomas); the assembled system is strictly diagonally
// dominant for every admissible step size, so no pivoting.
inline void thomas_solve(const std::vector<double>& sub, const std::vector<double>& diag,
                         const std::vector<double>& super, const std::vector<double>& rhs,
                         std::vector<double>& cp, std::vector<double>& dp, double* out) {
  const int n = static_cast<int>(diag.size());
  cp[0] = super[0] / diag[0];
  dp[0] = rhs[0] / diag[0];
  for (int i = 1; i < n; ++i) {
    const double m = diag[i] - sub[i] * cp[i - 1];
    cp[i] = super[i] / m;
    dp[i] = (rhs[i] - sub[i] * dp[i - 1]) / m;
  }
  out[n - 1] = dp[n - 1];
  for (int i = n - 2; i >= 0; --i) out[i] = dp[i] - cp[i] * out[i + 1];
}

}  // namespace detail

struct LambdaSolution {
  Problem problem;
  ValueSurface surface;
  MarkTable marks;           // reusable mark-integral geometry on the x grid
  double m_clamp = 0.0;
  bool d0_linear_theta = false;  // zeroth-order convention the solve used
  long clamp_activations = 0;
  Envelope envelope0;        // bounds at t = 0 (time-to-go = horizon)
  double worst_lo_slack = 0.0;  // min over the grid of (value - lower bound)
  double worst_hi_slack = 0.0;  // min over the grid of (upper bound - value)
};

inline void validate_pide_config(const Problem& p, const PideConfig& cfg) {
  if (cfg.nx < 3) throw std::invalid_argument("pide: nx must be at least 3");
  if (cfg.nt < 1) throw std::invalid_argument("pide: nt must be at least 1");
  if (cfg.n_q < 8) throw std::invalid_argument("pide: n_q must be at least 8");
  if (!(cfg.tail_eps > 0.0) || cfg.tail_eps > 1e-6)
    throw std::invalid_argument("pide: tail_eps must lie in (0, 1e-6]");
  if (!(cfg.bound_slack >= 0.0)) throw std::invalid_argument("pide: bound_slack must be >= 0");
  // Crude Lipschitz budget for the explicit nonlocal term: its sensitivity to
  // value perturbations is at most about lambda * gain with
  // gain = (hi/lo)^{(2-beta)/(1-beta)} over the reachable value range; keep
  // one explicit step well inside the contraction region.
  const double beta = p.utility.beta();
  const double dt = p.horizon / cfg.nt;
  const double log_range = std::abs(beta) * growth_rate(p.market, beta) * p.horizon;
  const double gain = std::exp(log_range * (2.0 - beta) / (1.0 - beta));
  if (dt * p.lambda * 2.0 * gain > 0.5)
    throw numerical_error(
        "pide: time step too large for the explicit nonlocal term; increase nt (budget "
        "dt * lambda * 2 * gain <= 1/2, gain = value-range^((2-beta)/(1-beta)))");
}

inline LambdaSolution solve_lambda(const Problem& p, const SignalDensityPair& pair,
                                   const PideConfig& cfg = {}) {
  p.validate();
  validate_pide_config(p, cfg);
  const double beta = p.utility.beta();
  const double T = p.horizon;
  const int nx = cfg.nx, nt = cfg.nt;
  const double dt = T / nt;
  const double dx = 1.0 / (nx - 1);

  LambdaSolution sol{p,
                     ValueSurface(nt, nx, T),
                     MarkTable{},
                     cfg.m_clamp > 0.0 ? cfg.m_clamp : default_m_clamp(p.market, beta, T),
                     cfg.d0_linear_theta,
                     0,
                     lambda_envelope(p.market, beta, T),
                     std::numeric_limits<double>::infinity(),
                     std::numeric_limits<double>::infinity()};
  ValueSurface& lam = sol.surface;
  sol.marks = make_mark_table(pair, lam.x_grid(), cfg.n_q, cfg.tail_eps);

  // Identical densities make every Bayes update a no-op (xi = x, ratio 1), so
  // the nonlocal term is identically zero and the loop can be skipped.
  const bool jumps_active = p.lambda > 0.0 && !pair.identical();

  // Coefficients and the implicit tridiagonal system. Upwinding the drift by
  // its sign also produces the correct boundary rows: the diffusion
  // coefficient vanishes at x = 0 and x = 1, and the drift points inward at
  // both ends (a2 > 0 and -a1 < 0), so the first and last rows reduce to
  // one-sided first-order rows with no ghost nodes.
  std::vector<double> sub(nx), diag(nx), super(nx);
  for (int j = 0; j < nx; ++j) {
    const double x = lam.x(j);
    const double sb = sigma_bar(p.market, x);
    const double D = 0.5 * sb * sb / (dx * dx);
    const double mu = mu_bar(p.regime, p.market, beta, x);
    const double U = std::max(mu, 0.0) / dx;   // weight on the forward difference
    const double W = std::max(-mu, 0.0) / dx;  // weight on the backward difference
    const double d0 = d_zero(p.market, beta, x, cfg.d0_linear_theta);
    sub[j] = -dt * (D + W);
    super[j] = -dt * (D + U);
    diag[j] = 1.0 + dt * (2.0 * D + U + W) + dt * d0;
  }

  std::vector<double> rhs(nx), src(nx, 0.0), cp(nx), dp(nx);
  for (int j = 0; j < nx; ++j) lam.at(nt, j) = 1.0;

  for (int it = nt - 1; it >= 0; --it) {
    const double* old = lam.slice(it + 1);
    if (jumps_active) i_beta_slice(old, sol.marks, beta, p.lambda, sol.m_clamp, src.data(),
                                   sol.clamp_activations);
    for (int j = 0; j < nx; ++j) rhs[j] = old[j] + dt * (src[j] + 1.0);
    detail::thomas_solve(sub, diag, super, rhs, cp, dp, lam.slice(it));
    for (int j = 0; j < nx; ++j) {
      const double v = lam.at(it, j);
      if (!std::isfinite(v) || v <= kValueFloor)
        throw numerical_error("pide: slice " + std::to_string(it) +
                              " lost positivity at node " + std::to_string(j));
    }
  }

  // Envelope audit. With the alternative zeroth-order convention the bounds
  // are not guaranteed, so they are recorded but not enforced.
  int bad_it = -1, bad_j = -1;
  for (int it = 0; it <= nt; ++it) {
    const double tau = T * (nt - it) / nt;
    const Envelope env = lambda_envelope(p.market, beta, tau);
    for (int j = 0; j < nx; ++j) {
      const double v = lam.at(it, j);
      const double lo_slack = v - env.lo, hi_slack = env.hi - v;
      if (lo_slack < sol.worst_lo_slack) sol.worst_lo_slack = lo_slack;
      if (hi_slack < sol.worst_hi_slack) sol.worst_hi_slack = hi_slack;
      if ((lo_slack < -cfg.bound_slack || hi_slack < -cfg.bound_slack) && bad_it < 0) {
        bad_it = it;
        bad_j = j;
      }
    }
  }
  if (cfg.check_bounds && !cfg.d0_linear_theta && bad_it >= 0)
    throw numerical_error("pide: surface leaves the value envelope at t index " +
                          std::to_string(bad_it) + ", x index " + std::to_string(bad_j) +
                          " (worst slacks " + std::to_string(sol.worst_lo_slack) + ", " +
                          std::to_string(sol.worst_hi_slack) + ")");
  return sol;
}

// Closed form for regime-independent market price of risk (mu1 = mu2): the
// PIDE collapses to the scalar ODE L' = 1 - d0 L, L(0) = 1 in time-to-go.
inline double merton_oracle(double d0, double tau) {
  if (std::abs(d0) < 1e-14) return 1.0 + tau;
  const double decay = std::exp(-d0 * tau);
  return -std::expm1(-d0 * tau) / d0 + decay;
}

}  // namespace bullbear
