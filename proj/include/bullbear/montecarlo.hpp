#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "bullbear/errors.hpp"
#include "bullbear/filter.hpp"
#include "bullbear/model.hpp"
#include "bullbear/pide.hpp"
#include "bullbear/rng.hpp"
#include "bullbear/simulate.hpp"
#include "bullbear/strategy.hpp"
#include "bullbear/surface.hpp"

namespace bullbear {

// Monte Carlo verification of a solved surface: a martingale certificate, two
// independent estimators of the dual value, and the realized utility of the
// feedback strategy. Every estimator reports its target, a tolerance with an
// explicit discretization budget, and a verdict.

struct MCReport {
  std::string name;
  double mean = 0.0;
  double stderr_ = 0.0;
  long paths = 0;
  double dt = 0.0;
  std::uint64_t seed = 0;
  double target = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  std::map<std::string, double> extra;
};

struct McConfig {
  long paths = 20000;
  double dt = 1e-3;
  std::uint64_t seed = 2026;
  double t0 = 0.0;
  double x0 = -1.0;        // < 0 selects the problem's x0
  double eval_time = -1.0; // martingale evaluation point; < 0 selects the horizon
  long calib_paths = 10000;
  int max_halvings = 3;
};

namespace detail {

struct MeanStderr {
  double mean = 0.0;
  double se = 0.0;
};

inline MeanStderr mean_stderr(const std::vector<double>& v) {
  const double n = static_cast<double>(v.size());
  double m = 0.0;
  for (double x : v) m += x;
  m /= n;
  double s2 = 0.0;
  for (double x : v) s2 += (x - m) * (x - m);
  s2 /= std::max(1.0, n - 1.0);
  return {m, std::sqrt(s2 / n)};
}

// CRRA utility c^kappa / kappa, with the natural limits at c = 0: zero for
// kappa in (0, 1) and -infinity for kappa < 0.
inline double crra(double c, double kappa) {
  if (c > 0.0) return std::pow(c, kappa) / kappa;
  return kappa > 0.0 ? 0.0 : -std::numeric_limits<double>::infinity();
}

// Empirical first-order discretization budget: halve dt until the estimate
// shift drops below one (combined) standard error, then read off the slope.
// The slope is inflated by 1.5 so the budget covers the bias it extrapolates
// instead of merely matching it; on a deterministic instance the raw slope
// equals the bias exactly and any higher-order remainder would tip the check.
struct DtCalibration {
  double c_disc = 0.0;
  int rounds = 0;
  bool converged = false;
};

inline DtCalibration calibrate_dt(const std::function<MeanStderr(double, long)>& run, double dt,
                                  long cal_paths, int max_halvings) {
  DtCalibration out;
  double dt_c = dt;
  MeanStderr coarse = run(dt_c, cal_paths);
  for (int i = 0; i < max_halvings; ++i) {
    const MeanStderr fine = run(dt_c / 2.0, cal_paths);
    const double shift = std::abs(coarse.mean - fine.mean);
    out.c_disc = 1.5 * shift / (dt_c / 2.0);
    out.rounds = i + 1;
    if (shift < std::hypot(coarse.se, fine.se)) {
      out.converged = true;
      break;
    }
    coarse = fine;
    dt_c /= 2.0;
  }
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Tabulated mark-integral fields.
//
// Each simulation step needs mark integrals of the jump control at the
// current (t, x). Evaluating the quadrature per step is prohibitive, so the
// three primitives are tabulated once on the surface grid, sharing one
// nu_hat evaluation per (slice, grid node, quadrature node), and read back
// by bilinear interpolation:
//   e1 = integral of e^{beta nu} f1, e2 = same against f2,
//   g1 = integral of e^{nu} f_hat.
// Derived per-step quantities:
//   z_drift  = lambda (1 - g1)                  (log Z drift between events)
//   mix      = x e1 + (1 - x) e2                (event-weight compensator)
//   gamma    = -d0(x) + lambda (mix - 1 + beta (1 - g1))   (growth rate)
// For identical densities or lambda = 0 the Bayes update is a no-op, nu is
// identically zero, and all three fields are exactly one.
// ---------------------------------------------------------------------------
class DualFields {
 public:
  struct Terms {
    double e1 = 1.0, e2 = 1.0, g1 = 1.0;
  };

  DualFields(const LambdaSolution& sol, const SignalDensityPair& pair)
      : problem_(sol.problem),
        beta_(sol.problem.utility.beta()),
        m_clamp_(sol.m_clamp),
        linear_theta_(sol.d0_linear_theta),
        trivial_(!(sol.problem.lambda > 0.0) || pair.identical()),
        e1_(sol.surface.nt(), sol.surface.nx(), sol.surface.horizon()),
        e2_(sol.surface.nt(), sol.surface.nx(), sol.surface.horizon()),
        g1_(sol.surface.nt(), sol.surface.nx(), sol.surface.horizon()) {
    const ValueSurface& lam = sol.surface;
    const MarkTable& tab = sol.marks;
    const int nt = lam.nt(), nx = lam.nx();
    if (trivial_) {
      for (int it = 0; it <= nt; ++it)
        for (int j = 0; j < nx; ++j) {
          e1_.at(it, j) = 1.0;
          e2_.at(it, j) = 1.0;
          g1_.at(it, j) = 1.0;
        }
      return;
    }
    for (int it = 0; it <= nt; ++it) {
      const double* row = lam.slice(it);
      for (int j = 0; j < nx; ++j) {
        const double lam_x = row[j];
        double s1 = 0.0, s2 = 0.0, sg = 0.0;
        for (int q = 0; q < tab.n_nodes; ++q) {
          const std::size_t id = tab.idx(j, q);
          const double fh = tab.fhat[id];
          if (fh <= 0.0) continue;  // mark unreachable from this state
          const int c = tab.cell[id];
          const double at_xi = lam.lerp(row[c], row[c + 1], tab.frac[id]);
          const double nu = nu_hat_value(at_xi, lam_x, beta_, m_clamp_, &clamps_);
          const double w = tab.w[q];
          const double ebn = std::exp(beta_ * nu);
          s1 += w * tab.f1v[q] * ebn;
          s2 += w * tab.f2v[q] * ebn;
          sg += w * fh * std::exp(nu);
        }
        e1_.at(it, j) = s1;
        e2_.at(it, j) = s2;
        g1_.at(it, j) = sg;
      }
    }
  }

  bool trivial() const { return trivial_; }
  long clamp_activations() const { return clamps_; }

  Terms at(double t, double x) const {
    if (trivial_) return {};
    return {e1_.value(t, x), e2_.value(t, x), g1_.value(t, x)};
  }

  // drift of log Z between events under the feedback jump control
  double z_drift(double t, double x) const {
    if (trivial_) return 0.0;
    return problem_.lambda * (1.0 - g1_.value(t, x));
  }

  double mix_e(double t, double x) const {
    if (trivial_) return 1.0;
    return x * e1_.value(t, x) + (1.0 - x) * e2_.value(t, x);
  }

  double gamma(double t, double x) const {
    const Terms f = at(t, x);
    const double mix = x * f.e1 + (1.0 - x) * f.e2;
    return -d_zero(problem_.market, beta_, x, linear_theta_) +
           problem_.lambda * (mix - 1.0 + beta_ * (1.0 - f.g1));
  }

 private:
  Problem problem_;
  double beta_ = 0.0;
  double m_clamp_ = 0.0;
  bool linear_theta_ = false;
  bool trivial_ = false;
  ValueSurface e1_, e2_, g1_;
  long clamps_ = 0;
};

// ---------------------------------------------------------------------------
// Dual-state paths under the observation measure.
// ---------------------------------------------------------------------------

enum class DualControl { nu_hat, zero };

struct JumpRecord {
  double time = 0.0;
  double mark = 0.0;
  double pre = 0.0;   // belief just before the event
  double post = 0.0;  // Bayes update of the belief
  double nu = 0.0;    // jump control applied to Z (zero under DualControl::zero)
};

struct DualPath {
  std::vector<double> times;  // grid nodes
  std::vector<double> pi;     // belief at the nodes (post-event)
  std::vector<double> z;      // dual state at the nodes
  std::vector<JumpRecord> jumps;
  double z_beta_integral = 0.0;  // running cost term of the dual functional
};

struct DualRunStats {
  double functional = 0.0;      // (e^{-r s} Z_s)^beta Lambda(s, pi_s) + running term
  double z_beta_integral = 0.0;
  double disc_z_beta_end = 0.0;
  double z_end = 1.0;
  double pi_end = 0.0;
  long events = 0;
  long clamps = 0;
};

// Simulates the belief and the dual state on [t0, end_time] under the
// observation measure: the belief diffuses with the filter dynamics driven by
// fresh innovations, signal events arrive at rate lambda with marks drawn
// from the current mixture, and Z accumulates its between-event drift and the
// e^{nu} event factors of the chosen control. The returned functional is
//   (e^{-r (s - t0)} Z_s)^beta Lambda(s, pi_s) + int_{t0}^s (e^{-r} Z)^beta du
// evaluated at s = end_time; with s equal to the horizon it is the dual
// value estimate itself (terminal slice is one).
inline DualRunStats run_dual_path(const LambdaSolution& sol, const DualFields& fields,
                                  const SignalDensityPair& pair, DualControl ctrl, double t0,
                                  double x0, double end_time, double dt, std::uint64_t seed,
                                  std::uint64_t path_index, DualPath* record = nullptr) {
  const Problem& p = sol.problem;
  const MarketParams& m = p.market;
  const RegimeParams& rg = p.regime;
  const double beta = p.utility.beta();
  const double theta_diff = m.theta1() - m.theta2();
  const double span = end_time - t0;
  const std::size_t n = grid_steps(span, dt);
  const bool use_nu = (ctrl == DualControl::nu_hat);

  auto brownian = make_engine(seed, Stream::brownian, path_index);
  auto arrivals = make_engine(seed, Stream::arrivals, path_index);
  auto marks = make_engine(seed, Stream::marks, path_index);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> u01(0.0, 1.0);

  std::vector<double> event_times;
  if (p.lambda > 0.0) {
    std::poisson_distribution<int> count(p.lambda * span);
    const int n_ev = count(arrivals);
    event_times.resize(n_ev);
    for (int i = 0; i < n_ev; ++i) event_times[i] = t0 + span * u01(arrivals);
    std::sort(event_times.begin(), event_times.end());
  }

  DualRunStats st;
  double pi = x0, log_z = 0.0, integral = 0.0, cur = t0;

  if (record) {
    record->times.assign(1, cur);
    record->pi.assign(1, pi);
    record->z.assign(1, 1.0);
    record->jumps.clear();
  }

  // advances belief and dual state over an event-free window [cur, to)
  auto advance = [&](double to) {
    const double h = to - cur;
    if (h <= 0.0) {
      cur = to;
      return;
    }
    integral += std::exp(beta * (log_z - m.r * (cur - t0))) * h;
    const double th = theta_hat(m, pi);
    const double g = use_nu ? fields.z_drift(cur, pi) : 0.0;
    const double dw = std::sqrt(h) * gauss(brownian);
    log_z += -th * dw - 0.5 * th * th * h + g * h;
    pi = filter_step(pi, rg.a1, rg.a2, theta_diff, h, dw);
    cur = to;
  };

  std::size_t ev = 0;
  for (std::size_t k = 0; k < n; ++k) {
    const double step_end = (k + 1 == n) ? end_time : t0 + static_cast<double>(k + 1) * dt;
    while (ev < event_times.size() && event_times[ev] <= step_end) {
      advance(event_times[ev]);
      const double z = (u01(marks) < pi) ? pair.sample1(marks) : pair.sample2(marks);
      const double pre = pi;
      const double post = xi(pair, pre, z);
      double nu = 0.0;
      if (use_nu) {
        nu = nu_hat_value(sol.surface.value(cur, post), sol.surface.value(cur, pre), beta,
                          sol.m_clamp, &st.clamps);
        log_z += nu;
      }
      pi = clamp_prob(post);
      ++st.events;
      if (record) record->jumps.push_back({cur, z, pre, post, nu});
      ++ev;
    }
    advance(step_end);
    if (record) {
      record->times.push_back(cur);
      record->pi.push_back(pi);
      record->z.push_back(std::exp(log_z));
    }
  }

  st.z_beta_integral = integral;
  st.disc_z_beta_end = std::exp(beta * (log_z - m.r * span));
  st.z_end = std::exp(log_z);
  st.pi_end = pi;
  st.functional = st.disc_z_beta_end * sol.surface.value(end_time, pi) + integral;
  if (record) record->z_beta_integral = integral;
  return st;
}

inline DualPath simulate_dual_path(const LambdaSolution& sol, const DualFields& fields,
                                   const SignalDensityPair& pair, DualControl ctrl, double t0,
                                   double x0, double dt, std::uint64_t seed,
                                   std::uint64_t path_index = 0) {
  DualPath path;
  run_dual_path(sol, fields, pair, ctrl, t0, x0, sol.problem.horizon, dt, seed, path_index, &path);
  return path;
}

// ---------------------------------------------------------------------------
// Auxiliary-measure paths for the importance-weighted estimator.
// ---------------------------------------------------------------------------

struct AuxPath {
  std::vector<double> times;
  std::vector<double> upsilon;
  std::vector<double> log_xi;
  std::vector<JumpRecord> jumps;
  double gamma_integral = 0.0;
};

struct WeightedRunStats {
  double estimate = 0.0;  // Xi_T (e^{gamma_T} + int e^{gamma_s} ds)
  double xi_weight = 1.0; // Xi_T
  double gamma_integral = 0.0;
  long events = 0;
  long clamps = 0;
  bool overflow = false;
};

// Simulates the auxiliary belief process: same drift and diffusion as the
// measure-changed filter, but signal events arrive as an exogenous
// Poisson(lambda) stream whose marks are drawn from the current mixture
// f_hat(Up-, .). Relative to that reference law the target law's density
// along the path is the weight
//   Xi = prod_i e^{beta nu_i} * exp(-lambda int (mix(s, Up_s) - 1) ds),
// with every event factor evaluated at the pre-event state; the product
// factor is the arrival-density ratio e^{beta nu} f_hat / f_hat. Anchoring
// the reference marks at one fixed density instead leaves the same
// expectation but multiplies each factor by a density ratio whose second
// moment explodes for well-separated signal densities, burying the mean in
// weight tails no feasible sample size reaches; the mixture reference keeps
// every factor inside the clamp bound. The estimate weights the growth
// functional e^{gamma_T} + int e^{gamma_s} ds by Xi.
inline WeightedRunStats run_weighted_path(const LambdaSolution& sol, const DualFields& fields,
                                          const SignalDensityPair& pair, double t0, double x0,
                                          double dt, std::uint64_t seed, std::uint64_t path_index,
                                          AuxPath* record = nullptr) {
  const Problem& p = sol.problem;
  const MarketParams& m = p.market;
  const RegimeParams& rg = p.regime;
  const double beta = p.utility.beta();
  const double end_time = p.horizon;
  const double span = end_time - t0;
  const std::size_t n = grid_steps(span, dt);

  auto brownian = make_engine(seed, Stream::brownian, path_index);
  auto arrivals = make_engine(seed, Stream::arrivals, path_index);
  auto marks = make_engine(seed, Stream::marks, path_index);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> u01(0.0, 1.0);

  std::vector<double> event_times;
  if (p.lambda > 0.0) {
    std::poisson_distribution<int> count(p.lambda * span);
    const int n_ev = count(arrivals);
    event_times.resize(n_ev);
    for (int i = 0; i < n_ev; ++i) event_times[i] = t0 + span * u01(arrivals);
    std::sort(event_times.begin(), event_times.end());
  }

  WeightedRunStats st;
  double up = x0, log_xi = 0.0, g_int = 0.0, time_integral = 0.0, cur = t0;

  if (record) {
    record->times.assign(1, cur);
    record->upsilon.assign(1, up);
    record->log_xi.assign(1, 0.0);
    record->jumps.clear();
  }

  auto advance = [&](double to) {
    const double h = to - cur;
    if (h <= 0.0) {
      cur = to;
      return;
    }
    time_integral += std::exp(g_int) * h;
    g_int += fields.gamma(cur, up) * h;
    log_xi -= p.lambda * (fields.mix_e(cur, up) - 1.0) * h;
    const double dw = std::sqrt(h) * gauss(brownian);
    up = clamp_prob(up + mu_bar(rg, m, beta, up) * h + sigma_bar(m, up) * dw);
    cur = to;
  };

  std::size_t ev = 0;
  for (std::size_t k = 0; k < n; ++k) {
    const double step_end = (k + 1 == n) ? end_time : t0 + static_cast<double>(k + 1) * dt;
    while (ev < event_times.size() && event_times[ev] <= step_end) {
      advance(event_times[ev]);
      const double pre = up;
      const double z = (u01(marks) < pre) ? pair.sample1(marks) : pair.sample2(marks);
      const double post = xi(pair, pre, z);
      const double nu = nu_hat_value(sol.surface.value(cur, post), sol.surface.value(cur, pre),
                                     beta, sol.m_clamp, &st.clamps);
      log_xi += beta * nu;
      up = clamp_prob(post);
      ++st.events;
      if (record) record->jumps.push_back({cur, z, pre, post, nu});
      ++ev;
    }
    advance(step_end);
    if (record) {
      record->times.push_back(cur);
      record->upsilon.push_back(up);
      record->log_xi.push_back(log_xi);
    }
  }

  st.xi_weight = std::exp(log_xi);
  st.gamma_integral = g_int;
  st.estimate = st.xi_weight * (std::exp(g_int) + time_integral);
  st.overflow = !std::isfinite(st.estimate) || std::abs(log_xi) > 700.0;
  if (record) record->gamma_integral = g_int;
  return st;
}

// ---------------------------------------------------------------------------
// Report builders.
// ---------------------------------------------------------------------------

namespace detail {

inline double resolve_x0(const Problem& p, const McConfig& cfg) {
  const double x = cfg.x0 < 0.0 ? p.x0 : cfg.x0;
  if (!(x > 0.0) || !(x < 1.0))
    throw std::invalid_argument("monte carlo: launch state must lie strictly inside (0, 1)");
  return x;
}

}  // namespace detail

// Certificate that the functional (e^{-r} Z)^beta Lambda + running term has
// constant expectation along the optimal control: its mean at eval_time must
// match Lambda(t0, x0) within 3 stderr plus a calibrated discretization
// budget.
inline MCReport martingale_check(const LambdaSolution& sol, const DualFields& fields,
                                 const SignalDensityPair& pair, const McConfig& cfg) {
  const double x0 = detail::resolve_x0(sol.problem, cfg);
  const double eval = cfg.eval_time < 0.0 ? sol.problem.horizon : cfg.eval_time;
  if (eval <= cfg.t0 || eval > sol.problem.horizon + 1e-12)
    throw std::invalid_argument("martingale_check: eval_time must lie in (t0, horizon]");

  long clamps = 0;  // jump-control clamp hits across every path run here
  auto run = [&](double dt, long paths) {
    std::vector<double> vals(static_cast<std::size_t>(paths));
    for (long i = 0; i < paths; ++i) {
      const auto st = run_dual_path(sol, fields, pair, DualControl::nu_hat, cfg.t0, x0, eval, dt,
                                    cfg.seed, static_cast<std::uint64_t>(i));
      vals[static_cast<std::size_t>(i)] = st.functional;
      clamps += st.clamps;
    }
    return detail::mean_stderr(vals);
  };

  const auto calib = detail::calibrate_dt(run, cfg.dt, std::min(cfg.calib_paths, cfg.paths),
                                          cfg.max_halvings);
  const auto main = run(cfg.dt, cfg.paths);

  MCReport rep;
  rep.name = "martingale";
  rep.mean = main.mean;
  rep.stderr_ = main.se;
  rep.paths = cfg.paths;
  rep.dt = cfg.dt;
  rep.seed = cfg.seed;
  rep.target = sol.surface.value(cfg.t0, x0);
  rep.tolerance = 3.0 * main.se + calib.c_disc * cfg.dt;
  rep.pass = std::abs(rep.mean - rep.target) <= rep.tolerance;
  rep.extra["c_disc"] = calib.c_disc;
  rep.extra["calib_rounds"] = calib.rounds;
  rep.extra["calib_converged"] = calib.converged ? 1.0 : 0.0;
  rep.extra["eval_time"] = eval;
  rep.extra["clamps"] = static_cast<double>(clamps);
  return rep;
}

// Plain estimate of the dual value: the functional at the horizon. Under the
// feedback control it must reproduce Lambda(t0, x0); under the zero control
// it lands on the suboptimal side.
inline MCReport dual_estimate_direct(const LambdaSolution& sol, const DualFields& fields,
                                     const SignalDensityPair& pair, const McConfig& cfg,
                                     DualControl ctrl = DualControl::nu_hat) {
  const double x0 = detail::resolve_x0(sol.problem, cfg);
  const double T = sol.problem.horizon;
  const double beta = sol.problem.utility.beta();

  std::vector<double> z_end(static_cast<std::size_t>(cfg.paths));
  long clamps = 0;
  auto run_collect = [&](double dt, long paths, bool keep_z) {
    std::vector<double> vals(static_cast<std::size_t>(paths));
    for (long i = 0; i < paths; ++i) {
      const auto st = run_dual_path(sol, fields, pair, ctrl, cfg.t0, x0, T, dt, cfg.seed,
                                    static_cast<std::uint64_t>(i));
      vals[static_cast<std::size_t>(i)] = st.functional;
      clamps += st.clamps;
      if (keep_z) z_end[static_cast<std::size_t>(i)] = st.z_end;
    }
    return detail::mean_stderr(vals);
  };
  auto run = [&](double dt, long paths) { return run_collect(dt, paths, false); };

  const auto calib = detail::calibrate_dt(run, cfg.dt, std::min(cfg.calib_paths, cfg.paths),
                                          cfg.max_halvings);
  const auto main = run_collect(cfg.dt, cfg.paths, true);
  const auto zstat = detail::mean_stderr(z_end);

  MCReport rep;
  rep.name = ctrl == DualControl::nu_hat ? "dual_direct" : "dual_direct_zero";
  rep.mean = main.mean;
  rep.stderr_ = main.se;
  rep.paths = cfg.paths;
  rep.dt = cfg.dt;
  rep.seed = cfg.seed;
  rep.target = sol.surface.value(cfg.t0, x0);
  rep.tolerance = 3.0 * main.se + calib.c_disc * cfg.dt;
  if (ctrl == DualControl::nu_hat) {
    rep.pass = std::abs(rep.mean - rep.target) <= rep.tolerance;
  } else {
    // any other control sits on the suboptimal side of the optimized value
    rep.pass = beta > 0.0 ? rep.mean <= rep.target + rep.tolerance
                          : rep.mean >= rep.target - rep.tolerance;
  }
  rep.extra["c_disc"] = calib.c_disc;
  rep.extra["calib_rounds"] = calib.rounds;
  rep.extra["calib_converged"] = calib.converged ? 1.0 : 0.0;
  rep.extra["z_mean"] = zstat.mean;
  rep.extra["z_stderr"] = zstat.se;
  rep.extra["clamps"] = static_cast<double>(clamps);
  return rep;
}

// Importance-weighted estimate of the dual value from the auxiliary measure.
// Also reports the mean of the weight itself, which must be one.
inline MCReport dual_estimate_weighted(const LambdaSolution& sol, const DualFields& fields,
                                       const SignalDensityPair& pair, const McConfig& cfg) {
  const double x0 = detail::resolve_x0(sol.problem, cfg);

  std::vector<double> xi_w(static_cast<std::size_t>(cfg.paths));
  long overflow = 0;
  long clamps = 0;
  auto run_collect = [&](double dt, long paths, bool keep) {
    std::vector<double> vals(static_cast<std::size_t>(paths));
    for (long i = 0; i < paths; ++i) {
      const auto st =
          run_weighted_path(sol, fields, pair, cfg.t0, x0, dt, cfg.seed,
                            static_cast<std::uint64_t>(i));
      vals[static_cast<std::size_t>(i)] = st.estimate;
      clamps += st.clamps;
      if (keep) {
        xi_w[static_cast<std::size_t>(i)] = st.xi_weight;
        if (st.overflow) ++overflow;
      }
    }
    return detail::mean_stderr(vals);
  };
  auto run = [&](double dt, long paths) { return run_collect(dt, paths, false); };

  const auto calib = detail::calibrate_dt(run, cfg.dt, std::min(cfg.calib_paths, cfg.paths),
                                          cfg.max_halvings);
  const auto main = run_collect(cfg.dt, cfg.paths, true);
  const auto xistat = detail::mean_stderr(xi_w);

  MCReport rep;
  rep.name = "dual_weighted";
  rep.mean = main.mean;
  rep.stderr_ = main.se;
  rep.paths = cfg.paths;
  rep.dt = cfg.dt;
  rep.seed = cfg.seed;
  rep.target = sol.surface.value(cfg.t0, x0);
  rep.tolerance = 3.0 * main.se + calib.c_disc * cfg.dt;
  rep.pass = overflow == 0 && std::abs(rep.mean - rep.target) <= rep.tolerance;
  rep.extra["c_disc"] = calib.c_disc;
  rep.extra["calib_rounds"] = calib.rounds;
  rep.extra["calib_converged"] = calib.converged ? 1.0 : 0.0;
  rep.extra["xi_mean"] = xistat.mean;
  rep.extra["xi_stderr"] = xistat.se;
  rep.extra["overflow"] = static_cast<double>(overflow);
  rep.extra["clamps"] = static_cast<double>(clamps);
  return rep;
}

// ---------------------------------------------------------------------------
// Primal verification: realized utility of a wealth-proportional strategy.
// ---------------------------------------------------------------------------

// Per-path realized utility of the feedback strategy (or, with a null field,
// of the no-investment strategy consuming v0 / (horizon + 1) at a constant
// rate). The wealth equation is integrated by Euler with the same Brownian
// increments that drove the asset; a path whose wealth hits zero or below is
// truncated to zero wealth and zero controls (counted as a bankruptcy).
inline std::vector<double> primal_utilities(const Problem& p, const SignalDensityPair& pair,
                                            const StrategyField* field, long paths, double dt,
                                            std::uint64_t seed, double invest_scale = 1.0,
                                            long* bankruptcies = nullptr) {
  p.validate();
  const double kappa = p.utility.kappa;
  const double T = p.horizon, r = p.market.r, sig = p.market.sigma;
  const std::size_t n = grid_steps(T, dt);
  SimulationInputs in;
  in.regime = p.regime;
  in.market = p.market;
  in.lambda = p.lambda;
  in.horizon = T;
  in.x0 = p.x0;

  const double c_const = p.v0 / (T + 1.0);
  std::vector<double> out(static_cast<std::size_t>(paths));
  long bank = 0;

  for (long i = 0; i < paths; ++i) {
    const WorldPath w = simulate_world(in, pair, dt, seed, static_cast<std::uint64_t>(i));
    const FilterPath fp = run_filter(w, p.regime, p.market, pair, p.x0);
    double v = p.v0, u = 0.0;
    bool broke = false;
    for (std::size_t k = 0; k < n; ++k) {
      double invest = 0.0, consume = 0.0;
      if (!broke) {
        if (field) {
          const double t = static_cast<double>(k) * dt;
          const double x = fp.pi[k];
          invest = invest_scale * v * field->invest_fraction(t, x);
          consume = v * field->consume_fraction(t, x);
        } else {
          consume = c_const;
        }
      }
      u += detail::crra(consume, kappa) * dt;
      if (!broke) {
        const double mu = (w.alpha[k] == 1) ? p.market.mu1 : p.market.mu2;
        v += ((mu - r) * invest + r * v - consume) * dt + sig * invest * w.dW[k];
        if (!(v > 0.0)) {
          broke = true;
          ++bank;
          v = 0.0;
        }
      }
    }
    u += detail::crra(v, kappa);
    out[static_cast<std::size_t>(i)] = u;
  }
  if (bankruptcies) *bankruptcies = bank;
  return out;
}

// Mean realized utility against the value the surface promises at (0, x0).
// The optimal feedback run is judged two-sided within max(3 stderr, 2%);
// any perturbed or zero run is judged against the weak-duality bound only.
inline MCReport primal_objective(const LambdaSolution& sol, const StrategyField* field,
                                 const SignalDensityPair& pair, const McConfig& cfg,
                                 double invest_scale = 1.0) {
  const Problem& p = sol.problem;
  if (cfg.t0 != 0.0)
    throw std::invalid_argument("primal_objective: wealth paths launch at time zero");
  long bank = 0;
  const auto vals = primal_utilities(p, pair, field, cfg.paths, cfg.dt, cfg.seed, invest_scale,
                                     &bank);
  const auto main = detail::mean_stderr(vals);

  MCReport rep;
  rep.name = field ? (invest_scale == 1.0 ? "primal" : "primal_perturbed") : "primal_zero";
  rep.mean = main.mean;
  rep.stderr_ = main.se;
  rep.paths = cfg.paths;
  rep.dt = cfg.dt;
  rep.seed = cfg.seed;
  rep.target = primal_value(p.v0, p.utility.kappa, sol.surface.value(0.0, p.x0));
  const double band = std::max(3.0 * main.se, 0.02 * std::abs(rep.target));
  rep.tolerance = band;
  if (field && invest_scale == 1.0) {
    rep.pass = std::abs(rep.mean - rep.target) <= band;
  } else {
    rep.pass = rep.mean <= rep.target + 3.0 * main.se;  // never beats the dual bound
  }
  rep.extra["bankruptcies"] = static_cast<double>(bank);
  return rep;
}

// ---------------------------------------------------------------------------
// Filter consistency: E[pi_t] against the chain's forward equation.
// ---------------------------------------------------------------------------

inline MCReport filter_mean_check(const Problem& p, const SignalDensityPair& pair, double t_eval,
                                  const McConfig& cfg) {
  p.validate();
  if (!(t_eval > 0.0) || t_eval > p.horizon + 1e-12)
    throw std::invalid_argument("filter_mean_check: t_eval must lie in (0, horizon]");

  SimulationInputs in;
  in.regime = p.regime;
  in.market = p.market;
  in.lambda = p.lambda;
  in.horizon = t_eval;
  in.x0 = p.x0;

  auto run = [&](double dt, long paths) {
    std::vector<double> vals(static_cast<std::size_t>(paths));
    for (long i = 0; i < paths; ++i) {
      const WorldPath w = simulate_world(in, pair, dt, cfg.seed, static_cast<std::uint64_t>(i));
      const FilterPath fp = run_filter(w, p.regime, p.market, pair, p.x0);
      vals[static_cast<std::size_t>(i)] = fp.pi.back();
    }
    return detail::mean_stderr(vals);
  };

  const auto calib = detail::calibrate_dt(run, cfg.dt, std::min(cfg.calib_paths, cfg.paths),
                                          cfg.max_halvings);
  const auto main = run(cfg.dt, cfg.paths);

  MCReport rep;
  rep.name = "filter_mean";
  rep.mean = main.mean;
  rep.stderr_ = main.se;
  rep.paths = cfg.paths;
  rep.dt = cfg.dt;
  rep.seed = cfg.seed;
  rep.target = mean_filter_ode(p.regime, p.x0, t_eval);
  rep.tolerance = 3.0 * main.se + calib.c_disc * cfg.dt;
  rep.pass = std::abs(rep.mean - rep.target) <= rep.tolerance;
  rep.extra["c_disc"] = calib.c_disc;
  rep.extra["calib_rounds"] = calib.rounds;
  rep.extra["calib_converged"] = calib.converged ? 1.0 : 0.0;
  rep.extra["t_eval"] = t_eval;
  return rep;
}

}  // namespace bullbear
