#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

#include "bullbear/densities.hpp"
#include "bullbear/errors.hpp"
#include "bullbear/quadrature.hpp"

namespace bullbear {

// The signal pair is usable for filtering when the likelihood ratio f2/f1 is
// bounded, b_min < f2/f1 < b_max with 0 <= b_min < 1 < b_max < inf, and the
// order-3 divergence (1/6)(int f1^3/f2^2 dz - 1) is finite.

struct ScanConfig {
  int points = 4096;       // initial scan resolution
  int max_refine = 6;      // grid doublings until the extrema stabilize
  int max_expand = 12;     // domain growth rounds for unbounded supports
  double stabil_tol = 1e-3;
  double tail_eps = 1e-12;
};

struct RatioBounds {
  double b_min = 0.0;
  double b_max = std::numeric_limits<double>::infinity();
  bool b_max_finite = false;
  double argmax = 0.0;  // location of the ratio supremum, when finite
  // scan diagnostics (closed-form families also run the scan)
  double b_max_scan = 0.0;
  double b_min_scan = 0.0;
  bool closed_form = false;
  bool ratio_hits_zero = false;  // f2 vanishes somewhere f1 is positive
  int scan_points = 0;
};

struct BlrReport {
  RatioBounds bounds;
  double d3 = 0.0;
  bool d3_finite = false;
  bool passes = false;
  std::vector<std::string> flags;
  int quad_nodes = 0;
  double quad_lo = 0.0, quad_hi = 0.0;
};

namespace detail {

struct LogQuadratic {  // q(z) = A z^2 + B z + C
  double A = 0.0, B = 0.0, C = 0.0;
  double at(double z) const { return (A * z + B) * z + C; }
  double vertex() const { return -B / (2.0 * A); }
};

// log(f2/f1) for a single-Gaussian pair.
inline LogQuadratic gaussian_log_ratio(const GaussianSpec& g) {
  LogQuadratic q;
  q.A = 0.5 / g.var1 - 0.5 / g.var2;
  q.B = -g.mean1 / g.var1 + g.mean2 / g.var2;
  q.C = 0.5 * g.mean1 * g.mean1 / g.var1 - 0.5 * g.mean2 * g.mean2 / g.var2 +
        0.5 * std::log(g.var1 / g.var2);
  return q;
}

// log(f1^3 / f2^2) for a single-Gaussian pair.
inline LogQuadratic gaussian_log_d3_integrand(const GaussianSpec& g) {
  LogQuadratic q;
  q.A = -1.5 / g.var1 + 1.0 / g.var2;
  q.B = 3.0 * g.mean1 / g.var1 - 2.0 * g.mean2 / g.var2;
  q.C = -1.5 * g.mean1 * g.mean1 / g.var1 + g.mean2 * g.mean2 / g.var2 -
        1.5 * std::log(2.0 * M_PI * g.var1) + std::log(2.0 * M_PI * g.var2);
  return q;
}

// Scan points over [lo, hi]: uniform, with log spacing on the first segment
// when the densities blow up at the lower endpoint; kinks always included.
inline std::vector<double> make_scan_points(const SignalDensityPair& pair, double lo, double hi,
                                            int n) {
  std::vector<double> pts;
  pts.reserve(n + 8);
  const auto breaks = pair.breakpoints();
  if (pair.singular_lower() && lo > 0.0) {
    const double head = breaks.empty() ? std::min(1.0, hi) : std::min(breaks.front(), hi);
    const int k = n / 4;
    for (int i = 0; i <= k; ++i) pts.push_back(lo * std::pow(head / lo, double(i) / k));
    const int m = n - k;
    for (int i = 1; i <= m; ++i) pts.push_back(head + (hi - head) * double(i) / m);
  } else {
    for (int i = 0; i <= n; ++i) pts.push_back(lo + (hi - lo) * double(i) / n);
  }
  for (double b : breaks) {
    if (b > lo && b < hi) {
      pts.push_back(b);
      pts.push_back(std::nextafter(b, lo));
      pts.push_back(std::nextafter(b, hi));
    }
  }
  std::sort(pts.begin(), pts.end());
  return pts;
}

struct ScanResult {
  double rmax = -std::numeric_limits<double>::infinity();
  double rmin = std::numeric_limits<double>::infinity();
  double argmax = 0.0, argmin = 0.0;
  bool unbounded_point = false;  // f1 = 0 < f2 somewhere
  bool hits_zero = false;        // f2 = 0 < f1 somewhere
};

inline ScanResult scan_ratio(const SignalDensityPair& pair, const std::vector<double>& pts) {
  ScanResult r;
  for (double z : pts) {
    const double p1 = pair.pdf1(z), p2 = pair.pdf2(z);
    if (p1 <= 0.0 && p2 <= 0.0) continue;
    if (p1 <= 0.0) {
      r.unbounded_point = true;
      continue;
    }
    const double ratio = p2 / p1;
    if (p2 <= 0.0) r.hits_zero = true;
    if (ratio > r.rmax) {
      r.rmax = ratio;
      r.argmax = z;
    }
    if (ratio < r.rmin) {
      r.rmin = ratio;
      r.argmin = z;
    }
  }
  return r;
}

}  // namespace detail

// Paper-style closed-form constants for the power/exponential-vs-Gamma family.
inline double mixture_gamma_b_max_closed_form(const MixtureGammaSpec& s) {
  const double g = boost::math::tgamma(s.shape);
  return std::max(1.0 / (s.weight * s.shape), 1.0 / ((1.0 - s.weight) * std::exp(1.0))) / g;
}

inline double mixture_gamma_divergence_bound_closed_form(const MixtureGammaSpec& s) {
  const double g = boost::math::tgamma(s.shape);
  const double e = std::exp(1.0);
  return e * e * e * g * g * boost::math::tgamma(2.0 - 2.0 * s.shape) +
         2.0 * e * e * g * g * s.shape * s.shape;
}

// Extrema of f2/f1. Single-Gaussian and power/exponential-vs-Gamma pairs get
// closed forms; every family is also scanned (dense grid, refined until the
// extrema stabilize, domain grown when the supremum sits at an edge).
// Throws numerical_error when the supports are disjoint.
inline RatioBounds likelihood_ratio_bounds(const SignalDensityPair& pair,
                                           const ScanConfig& cfg = {}) {
  RatioBounds out;
  const auto sup = pair.support();
  Interval box = pair.truncated_support(cfg.tail_eps);

  // Closed forms first; they also pin the scan domain around the extremum.
  if (const auto* g = pair.gaussian()) {
    const auto q = detail::gaussian_log_ratio(*g);
    out.closed_form = true;
    if (q.A < 0.0) {
      out.b_max = std::exp(q.at(q.vertex()));
      out.b_max_finite = true;
      out.argmax = q.vertex();
      out.b_min = 0.0;
      box.lo = std::min(box.lo, q.vertex() - 1.0);
      box.hi = std::max(box.hi, q.vertex() + 1.0);
    } else if (q.A > 0.0) {
      out.b_min = std::exp(q.at(q.vertex()));
      out.b_max = std::numeric_limits<double>::infinity();
      out.b_max_finite = false;
    } else if (q.B != 0.0) {
      out.b_min = 0.0;
      out.b_max = std::numeric_limits<double>::infinity();
      out.b_max_finite = false;
    } else {
      out.b_min = out.b_max = std::exp(q.C);
      out.b_max_finite = true;
    }
  } else if (const auto* mg = pair.mixture_gamma()) {
    out.closed_form = true;
    out.b_max = mixture_gamma_b_max_closed_form(*mg);
    out.b_max_finite = true;
    out.argmax = (1.0 / (mg->weight * mg->shape) >= 1.0 / ((1.0 - mg->weight) * std::exp(1.0)))
                     ? 0.0
                     : 1.0;
    out.b_min = 0.0;  // ratio ~ z^(shape-1) -> 0 as z -> inf
  }

  // Dense scan with refinement and, on unbounded supports, domain expansion.
  const bool lo_open = std::isinf(sup.lo), hi_open = std::isinf(sup.hi);
  double prev_max = -1.0, prev_min = -1.0;
  detail::ScanResult sc;
  int n = cfg.points;
  int expansions = 0, refinements = 0;
  bool edge_capped = false;
  while (true) {
    const auto pts = detail::make_scan_points(pair, box.lo, box.hi, n);
    out.scan_points = static_cast<int>(pts.size());
    sc = detail::scan_ratio(pair, pts);
    const double width = box.hi - box.lo;
    const bool edge_hi = hi_open && sc.argmax > box.hi - 0.02 * width;
    const bool edge_lo = lo_open && sc.argmax < box.lo + 0.02 * width;
    if (edge_hi || edge_lo) {
      if (expansions >= cfg.max_expand) {
        edge_capped = true;  // supremum keeps running to the edge
        break;
      }
      if (edge_hi) box.hi += 0.5 * width;
      if (edge_lo) box.lo -= 0.5 * width;
      ++expansions;
      prev_max = -1.0;
      continue;
    }
    const bool stable_max =
        prev_max > 0.0 && std::abs(sc.rmax - prev_max) <= cfg.stabil_tol * sc.rmax;
    const bool stable_min =
        prev_min >= 0.0 && std::abs(sc.rmin - prev_min) <= cfg.stabil_tol * (sc.rmin + 1e-12);
    if ((stable_max && stable_min) || refinements >= cfg.max_refine) break;
    prev_max = sc.rmax;
    prev_min = sc.rmin;
    n *= 2;
    ++refinements;
  }

  if (sc.unbounded_point && sc.hits_zero)
    throw numerical_error(
        "likelihood ratio: disjoint supports, each density vanishes where the other is positive");

  out.b_max_scan = sc.rmax;
  out.b_min_scan = sc.rmin;
  out.ratio_hits_zero = sc.hits_zero;
  if (!out.closed_form) {
    if (sc.unbounded_point || edge_capped) {
      out.b_max = std::numeric_limits<double>::infinity();
      out.b_max_finite = false;
    } else {
      out.b_max = sc.rmax;
      out.b_max_finite = std::isfinite(sc.rmax);
    }
    out.b_min = sc.hits_zero ? 0.0 : sc.rmin;
    out.argmax = sc.argmax;
  }
  return out;
}

// Order-3 divergence (1/6)(int f1^3/f2^2 dz - 1). Gaussian pairs integrate in
// closed form; other families integrate over a domain grown until the
// integrand is negligible at the edges. Sustained growth toward an open
// support endpoint flags the divergence as infinite.
inline double d3_divergence(const SignalDensityPair& pair, int n_q = 512,
                            double tail_eps = 1e-12) {
  if (const auto* g = pair.gaussian()) {
    const auto q = detail::gaussian_log_d3_integrand(*g);
    if (q.A >= 0.0) return std::numeric_limits<double>::infinity();
    const double log_integral = 0.5 * std::log(M_PI / (-q.A)) + q.C - q.B * q.B / (4.0 * q.A);
    if (log_integral > 700.0) return std::numeric_limits<double>::infinity();
    return (std::exp(log_integral) - 1.0) / 6.0;
  }

  const auto sup = pair.support();
  Interval box = pair.truncated_support(tail_eps);
  auto g_at = [&](double z) {
    const double p1 = pair.pdf1(z), p2 = pair.pdf2(z);
    if (p1 <= 0.0) return 0.0;
    if (p2 <= 0.0) return std::numeric_limits<double>::infinity();
    return p1 * p1 * p1 / (p2 * p2);
  };

  // Grow the domain until the integrand at the open edges is negligible
  // relative to its interior maximum.
  int grow_lo = 0, grow_hi = 0;
  for (int round = 0; round < 60; ++round) {
    const auto pts = detail::make_scan_points(pair, box.lo, box.hi, 1024);
    double gmax = 0.0;
    for (double z : pts) {
      const double v = g_at(z);
      if (std::isinf(v) || std::isnan(v)) return std::numeric_limits<double>::infinity();
      gmax = std::max(gmax, v);
    }
    const double width = box.hi - box.lo;
    bool grew = false;
    if (std::isinf(sup.hi) && g_at(box.hi) > gmax * 1e-14) {
      const double before = g_at(box.hi);
      box.hi += 0.5 * width;
      grow_hi = (g_at(box.hi) > before) ? grow_hi + 1 : 0;
      grew = true;
    }
    if (std::isinf(sup.lo) && g_at(box.lo) > gmax * 1e-14) {
      const double before = g_at(box.lo);
      box.lo -= 0.5 * width;
      grow_lo = (g_at(box.lo) > before) ? grow_lo + 1 : 0;
      grew = true;
    }
    if (grow_lo >= 6 || grow_hi >= 6) return std::numeric_limits<double>::infinity();
    if (!grew) break;
    if (round == 59) return std::numeric_limits<double>::infinity();
  }

  const auto quad = make_mark_quadrature_on(pair, box, n_q);
  const double integral = quad.integrate(g_at);
  if (!std::isfinite(integral)) return std::numeric_limits<double>::infinity();
  return (integral - 1.0) / 6.0;
}

// Full condition check; errors from the ratio scan propagate.
inline BlrReport check_blr(const SignalDensityPair& pair, const ScanConfig& cfg = {},
                           int n_q = 512) {
  BlrReport rep;
  rep.bounds = likelihood_ratio_bounds(pair, cfg);
  rep.d3 = d3_divergence(pair, n_q, cfg.tail_eps);
  rep.d3_finite = std::isfinite(rep.d3);
  const Interval box = pair.truncated_support(cfg.tail_eps);
  rep.quad_lo = box.lo;
  rep.quad_hi = box.hi;
  rep.quad_nodes = n_q;

  const auto& b = rep.bounds;
  if (pair.identical() || (b.b_max_finite && b.b_max == b.b_min))
    rep.flags.push_back("uninformative: f1 and f2 coincide, the ratio is constant");
  if (!b.b_max_finite) rep.flags.push_back("ratio unbounded: no finite b_max exists");
  if (b.ratio_hits_zero)
    rep.flags.push_back("ratio hits zero: f2 vanishes where f1 is positive");
  if (!rep.d3_finite) rep.flags.push_back("divergence infinite: f1^3/f2^2 is not integrable");

  rep.passes = b.b_max_finite && b.b_max > 1.0 && b.b_min < 1.0 && !b.ratio_hits_zero &&
               rep.d3_finite && !pair.identical() && b.b_max != b.b_min;
  return rep;
}

}  // namespace bullbear
