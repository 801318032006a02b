#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <boost/math/special_functions/erf.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "bullbear/errors.hpp"
#include "bullbear/quadrature.hpp"

namespace bullbear {

struct Interval {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
};

// ============================================================
// Per-family parameter blocks
// ============================================================

// Signal mark ~ N(mean_i, var_i) in regime i.
struct GaussianSpec {
  double mean1 = 0.0, var1 = 1.0;
  double mean2 = 0.0, var2 = 1.0;

  void validate() const {
    if (!(var1 > 0.0) || !(var2 > 0.0))
      throw std::invalid_argument("gaussian signal: variances must be positive");
  }
};

// Regime 1 emits a finite Gaussian mixture, regime 2 a single Gaussian.
struct GaussianMixtureSpec {
  std::vector<double> weights, means, vars;
  double mean2 = 0.0, var2 = 1.0;

  void validate() const {
    if (weights.empty() || weights.size() != means.size() || weights.size() != vars.size())
      throw std::invalid_argument("gaussian_mixture signal: weights/means/vars sizes must match");
    double s = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
      if (!(weights[i] > 0.0) || !(vars[i] > 0.0))
        throw std::invalid_argument("gaussian_mixture signal: weights and variances must be positive");
      s += weights[i];
    }
    if (std::abs(s - 1.0) > 1e-9)
      throw std::invalid_argument("gaussian_mixture signal: weights must sum to 1");
    if (!(var2 > 0.0))
      throw std::invalid_argument("gaussian_mixture signal: var2 must be positive");
  }
};

// Regime 1: weight * shape * z^(shape-1) on (0,1) plus (1-weight) * e^(1-z) on
// (1,inf). Regime 2: Gamma(shape, 1). Both unbounded at 0 when shape < 1.
struct MixtureGammaSpec {
  double shape = 0.5;
  double weight = 0.5;

  void validate() const {
    if (!(shape > 0.0) || !(shape < 1.0))
      throw std::invalid_argument("mixture_gamma signal: shape must lie in (0, 1)");
    if (!(weight > 0.0) || !(weight < 1.0))
      throw std::invalid_argument("mixture_gamma signal: weight must lie in (0, 1)");
  }
};

// Piecewise-linear densities on a shared grid; renormalized at construction.
struct TabulatedSpec {
  std::vector<double> grid, f1, f2;

  void validate() const {
    if (grid.size() < 2 || grid.size() != f1.size() || grid.size() != f2.size())
      throw std::invalid_argument("tabulated signal: grid/f1/f2 sizes must match, >= 2 points");
    for (std::size_t i = 1; i < grid.size(); ++i)
      if (!(grid[i] > grid[i - 1]))
        throw std::invalid_argument("tabulated signal: grid must be strictly increasing");
    auto nonneg = [](const std::vector<double>& v) {
      for (double x : v)
        if (!(x >= 0.0)) return false;
      return true;
    };
    if (!nonneg(f1) || !nonneg(f2))
      throw std::invalid_argument("tabulated signal: density values must be nonnegative");
  }
};

enum class SignalFamily { gaussian, gaussian_mixture, mixture_gamma, tabulated };

inline const char* to_string(SignalFamily f) {
  switch (f) {
    case SignalFamily::gaussian: return "gaussian";
    case SignalFamily::gaussian_mixture: return "gaussian_mixture";
    case SignalFamily::mixture_gamma: return "mixture_gamma";
    case SignalFamily::tabulated: return "tabulated";
  }
  return "?";
}

namespace detail {

inline double normal_pdf(double z, double mean, double var) {
  const double d = z - mean;
  return std::exp(-0.5 * d * d / var) / std::sqrt(2.0 * M_PI * var);
}

inline double normal_cdf(double z, double mean, double var) {
  return 0.5 * std::erfc(-(z - mean) / std::sqrt(2.0 * var));
}

// q such that a N(mean, var) variable lies below mean - q (or above mean + q)
// with probability eps.
inline double normal_tail_halfwidth(double var, double eps) {
  return std::sqrt(2.0 * var) * boost::math::erfc_inv(2.0 * eps);
}

}  // namespace detail

// ============================================================
// SignalDensityPair
// ============================================================

// The pair (f1, f2) of mark densities, one per hidden regime, sharing one
// support. Exposes pointwise evaluation, exact CDFs, sampling, and the
// geometry the quadrature and scan code needs (truncation, kink locations,
// endpoint singularity).
class SignalDensityPair {
 public:
  explicit SignalDensityPair(GaussianSpec s) : spec_(std::move(s)) { std::get<GaussianSpec>(spec_).validate(); }
  explicit SignalDensityPair(GaussianMixtureSpec s) : spec_(std::move(s)) {
    std::get<GaussianMixtureSpec>(spec_).validate();
  }
  explicit SignalDensityPair(MixtureGammaSpec s) : spec_(std::move(s)) {
    std::get<MixtureGammaSpec>(spec_).validate();
  }
  explicit SignalDensityPair(TabulatedSpec s) : spec_(std::move(s)) {
    auto& t = std::get<TabulatedSpec>(spec_);
    t.validate();
    renormalize(t.grid, t.f1);
    renormalize(t.grid, t.f2);
    build_prefix(t.grid, t.f1, prefix1_);
    build_prefix(t.grid, t.f2, prefix2_);
  }

  SignalFamily family() const {
    return static_cast<SignalFamily>(spec_.index());
  }

  double pdf1(double z) const {
    switch (family()) {
      case SignalFamily::gaussian: {
        const auto& s = std::get<GaussianSpec>(spec_);
        return detail::normal_pdf(z, s.mean1, s.var1);
      }
      case SignalFamily::gaussian_mixture: {
        const auto& s = std::get<GaussianMixtureSpec>(spec_);
        double acc = 0.0;
        for (std::size_t i = 0; i < s.weights.size(); ++i)
          acc += s.weights[i] * detail::normal_pdf(z, s.means[i], s.vars[i]);
        return acc;
      }
      case SignalFamily::mixture_gamma: {
        const auto& s = std::get<MixtureGammaSpec>(spec_);
        if (z <= 0.0) return 0.0;
        if (z < 1.0) return s.weight * s.shape * std::pow(z, s.shape - 1.0);
        return (1.0 - s.weight) * std::exp(1.0 - z);
      }
      case SignalFamily::tabulated:
        return tab_pdf(std::get<TabulatedSpec>(spec_).f1, z);
    }
    return 0.0;
  }

  double pdf2(double z) const {
    switch (family()) {
      case SignalFamily::gaussian: {
        const auto& s = std::get<GaussianSpec>(spec_);
        return detail::normal_pdf(z, s.mean2, s.var2);
      }
      case SignalFamily::gaussian_mixture: {
        const auto& s = std::get<GaussianMixtureSpec>(spec_);
        return detail::normal_pdf(z, s.mean2, s.var2);
      }
      case SignalFamily::mixture_gamma: {
        const auto& s = std::get<MixtureGammaSpec>(spec_);
        if (z <= 0.0) return 0.0;
        return std::pow(z, s.shape - 1.0) * std::exp(-z) / boost::math::tgamma(s.shape);
      }
      case SignalFamily::tabulated:
        return tab_pdf(std::get<TabulatedSpec>(spec_).f2, z);
    }
    return 0.0;
  }

  double cdf1(double z) const {
    switch (family()) {
      case SignalFamily::gaussian: {
        const auto& s = std::get<GaussianSpec>(spec_);
        return detail::normal_cdf(z, s.mean1, s.var1);
      }
      case SignalFamily::gaussian_mixture: {
        const auto& s = std::get<GaussianMixtureSpec>(spec_);
        double acc = 0.0;
        for (std::size_t i = 0; i < s.weights.size(); ++i)
          acc += s.weights[i] * detail::normal_cdf(z, s.means[i], s.vars[i]);
        return acc;
      }
      case SignalFamily::mixture_gamma: {
        const auto& s = std::get<MixtureGammaSpec>(spec_);
        if (z <= 0.0) return 0.0;
        if (z < 1.0) return s.weight * std::pow(z, s.shape);
        return s.weight + (1.0 - s.weight) * (1.0 - std::exp(1.0 - z));
      }
      case SignalFamily::tabulated:
        return tab_cdf(std::get<TabulatedSpec>(spec_).f1, prefix1_, z);
    }
    return 0.0;
  }

  double cdf2(double z) const {
    switch (family()) {
      case SignalFamily::gaussian: {
        const auto& s = std::get<GaussianSpec>(spec_);
        return detail::normal_cdf(z, s.mean2, s.var2);
      }
      case SignalFamily::gaussian_mixture: {
        const auto& s = std::get<GaussianMixtureSpec>(spec_);
        return detail::normal_cdf(z, s.mean2, s.var2);
      }
      case SignalFamily::mixture_gamma: {
        const auto& s = std::get<MixtureGammaSpec>(spec_);
        if (z <= 0.0) return 0.0;
        return boost::math::gamma_p(s.shape, z);
      }
      case SignalFamily::tabulated:
        return tab_cdf(std::get<TabulatedSpec>(spec_).f2, prefix2_, z);
    }
    return 0.0;
  }

  double sample1(std::mt19937_64& eng) const {
    switch (family()) {
      case SignalFamily::gaussian: {
        const auto& s = std::get<GaussianSpec>(spec_);
        return std::normal_distribution<double>(s.mean1, std::sqrt(s.var1))(eng);
      }
      case SignalFamily::gaussian_mixture: {
        const auto& s = std::get<GaussianMixtureSpec>(spec_);
        std::discrete_distribution<int> pick(s.weights.begin(), s.weights.end());
        const int i = pick(eng);
        return std::normal_distribution<double>(s.means[i], std::sqrt(s.vars[i]))(eng);
      }
      case SignalFamily::mixture_gamma: {
        const auto& s = std::get<MixtureGammaSpec>(spec_);
        std::uniform_real_distribution<double> u01(0.0, 1.0);
        if (u01(eng) < s.weight) return std::pow(u01(eng), 1.0 / s.shape);
        return 1.0 + std::exponential_distribution<double>(1.0)(eng);
      }
      case SignalFamily::tabulated:
        return tab_sample(std::get<TabulatedSpec>(spec_).f1, prefix1_, eng);
    }
    return 0.0;
  }

  double sample2(std::mt19937_64& eng) const {
    switch (family()) {
      case SignalFamily::gaussian: {
        const auto& s = std::get<GaussianSpec>(spec_);
        return std::normal_distribution<double>(s.mean2, std::sqrt(s.var2))(eng);
      }
      case SignalFamily::gaussian_mixture: {
        const auto& s = std::get<GaussianMixtureSpec>(spec_);
        return std::normal_distribution<double>(s.mean2, std::sqrt(s.var2))(eng);
      }
      case SignalFamily::mixture_gamma: {
        const auto& s = std::get<MixtureGammaSpec>(spec_);
        return std::gamma_distribution<double>(s.shape, 1.0)(eng);
      }
      case SignalFamily::tabulated:
        return tab_sample(std::get<TabulatedSpec>(spec_).f2, prefix2_, eng);
    }
    return 0.0;
  }

  Interval support() const {
    switch (family()) {
      case SignalFamily::gaussian:
      case SignalFamily::gaussian_mixture:
        return {};
      case SignalFamily::mixture_gamma:
        return {0.0, std::numeric_limits<double>::infinity()};
      case SignalFamily::tabulated: {
        const auto& t = std::get<TabulatedSpec>(spec_);
        return {t.grid.front(), t.grid.back()};
      }
    }
    return {};
  }

  // Finite interval outside of which each density carries at most eps of
  // mass on each side.
  Interval truncated_support(double eps) const {
    switch (family()) {
      case SignalFamily::gaussian: {
        const auto& s = std::get<GaussianSpec>(spec_);
        const double q1 = detail::normal_tail_halfwidth(s.var1, eps);
        const double q2 = detail::normal_tail_halfwidth(s.var2, eps);
        return {std::min(s.mean1 - q1, s.mean2 - q2), std::max(s.mean1 + q1, s.mean2 + q2)};
      }
      case SignalFamily::gaussian_mixture: {
        const auto& s = std::get<GaussianMixtureSpec>(spec_);
        double lo = s.mean2 - detail::normal_tail_halfwidth(s.var2, eps);
        double hi = s.mean2 + detail::normal_tail_halfwidth(s.var2, eps);
        for (std::size_t i = 0; i < s.weights.size(); ++i) {
          const double q = detail::normal_tail_halfwidth(s.vars[i], eps);
          lo = std::min(lo, s.means[i] - q);
          hi = std::max(hi, s.means[i] + q);
        }
        return {lo, hi};
      }
      case SignalFamily::mixture_gamma: {
        const auto& s = std::get<MixtureGammaSpec>(spec_);
        // Mass of f1 below z is weight * z^shape, of f2 the regularized
        // incomplete gamma; similarly for the upper tails.
        const double lo1 = std::pow(eps / s.weight, 1.0 / s.shape);
        const double lo2 = boost::math::gamma_p_inv(s.shape, eps);
        const double hi1 = 1.0 - std::log(eps / (1.0 - s.weight));
        const double hi2 = boost::math::gamma_q_inv(s.shape, eps);
        return {std::min(lo1, lo2), std::max(hi1, hi2)};
      }
      case SignalFamily::tabulated:
        return support();
    }
    return {};
  }

  // Interior points where a density is not smooth; quadrature panels split here.
  std::vector<double> breakpoints() const {
    switch (family()) {
      case SignalFamily::mixture_gamma:
        return {1.0};
      case SignalFamily::tabulated: {
        const auto& t = std::get<TabulatedSpec>(spec_);
        return std::vector<double>(t.grid.begin() + 1, t.grid.end() - 1);
      }
      default:
        return {};
    }
  }

  // True when both densities blow up like z^(shape-1) at the lower support
  // endpoint; quadrature then integrates in u = z^shape.
  bool singular_lower() const {
    if (family() != SignalFamily::mixture_gamma) return false;
    return std::get<MixtureGammaSpec>(spec_).shape < 1.0;
  }

  double singular_exponent() const {
    return family() == SignalFamily::mixture_gamma ? std::get<MixtureGammaSpec>(spec_).shape : 1.0;
  }

  // Whether f1 and f2 are the same function (uninformative signals).
  bool identical() const {
    switch (family()) {
      case SignalFamily::gaussian: {
        const auto& s = std::get<GaussianSpec>(spec_);
        return s.mean1 == s.mean2 && s.var1 == s.var2;
      }
      case SignalFamily::gaussian_mixture: {
        const auto& s = std::get<GaussianMixtureSpec>(spec_);
        return s.weights.size() == 1 && s.means[0] == s.mean2 && s.vars[0] == s.var2;
      }
      case SignalFamily::mixture_gamma:
        return false;
      case SignalFamily::tabulated: {
        const auto& t = std::get<TabulatedSpec>(spec_);
        return t.f1 == t.f2;
      }
    }
    return false;
  }

  const GaussianSpec* gaussian() const { return std::get_if<GaussianSpec>(&spec_); }
  const GaussianMixtureSpec* gaussian_mixture() const { return std::get_if<GaussianMixtureSpec>(&spec_); }
  const MixtureGammaSpec* mixture_gamma() const { return std::get_if<MixtureGammaSpec>(&spec_); }
  const TabulatedSpec* tabulated() const { return std::get_if<TabulatedSpec>(&spec_); }

 private:
  static void renormalize(const std::vector<double>& grid, std::vector<double>& f) {
    double mass = 0.0;
    for (std::size_t i = 1; i < grid.size(); ++i)
      mass += 0.5 * (f[i] + f[i - 1]) * (grid[i] - grid[i - 1]);
    if (!(mass > 0.0))
      throw std::invalid_argument("tabulated signal: density must have positive mass");
    for (double& v : f) v /= mass;
  }

  static void build_prefix(const std::vector<double>& grid, const std::vector<double>& f,
                           std::vector<double>& prefix) {
    prefix.assign(grid.size(), 0.0);
    for (std::size_t i = 1; i < grid.size(); ++i)
      prefix[i] = prefix[i - 1] + 0.5 * (f[i] + f[i - 1]) * (grid[i] - grid[i - 1]);
    prefix.back() = 1.0;
  }

  double tab_pdf(const std::vector<double>& f, double z) const {
    const auto& grid = std::get<TabulatedSpec>(spec_).grid;
    if (z < grid.front() || z > grid.back()) return 0.0;
    const auto it = std::upper_bound(grid.begin(), grid.end(), z);
    const std::size_t i = std::min<std::size_t>(grid.size() - 1, it - grid.begin());
    const std::size_t j = i == 0 ? 0 : i - 1;
    if (i == j) return f[0];
    const double w = (z - grid[j]) / (grid[i] - grid[j]);
    return f[j] + w * (f[i] - f[j]);
  }

  double tab_cdf(const std::vector<double>& f, const std::vector<double>& prefix, double z) const {
    const auto& grid = std::get<TabulatedSpec>(spec_).grid;
    if (z <= grid.front()) return 0.0;
    if (z >= grid.back()) return 1.0;
    const auto it = std::upper_bound(grid.begin(), grid.end(), z);
    const std::size_t i = it - grid.begin();
    const std::size_t j = i - 1;
    const double h = grid[i] - grid[j], t = z - grid[j];
    const double slope = (f[i] - f[j]) / h;
    return prefix[j] + f[j] * t + 0.5 * slope * t * t;
  }

  double tab_sample(const std::vector<double>& f, const std::vector<double>& prefix,
                    std::mt19937_64& eng) const {
    const auto& grid = std::get<TabulatedSpec>(spec_).grid;
    const double u = std::uniform_real_distribution<double>(0.0, 1.0)(eng);
    const auto it = std::upper_bound(prefix.begin(), prefix.end(), u);
    std::size_t i = std::min<std::size_t>(prefix.size() - 1, it - prefix.begin());
    if (i == 0) i = 1;
    const std::size_t j = i - 1;
    const double h = grid[i] - grid[j];
    const double c = u - prefix[j];
    const double slope = (f[i] - f[j]) / h;
    double t;
    if (std::abs(slope) * h < 1e-14 * std::max(f[j], 1e-300)) {
      t = f[j] > 0.0 ? c / f[j] : 0.5 * h;
    } else {
      const double disc = f[j] * f[j] + 2.0 * slope * c;
      t = (std::sqrt(std::max(disc, 0.0)) - f[j]) / slope;
    }
    return grid[j] + std::clamp(t, 0.0, h);
  }

  std::variant<GaussianSpec, GaussianMixtureSpec, MixtureGammaSpec, TabulatedSpec> spec_;
  std::vector<double> prefix1_, prefix2_;  // tabulated cumulative masses
};

// ============================================================
// Mark-space quadrature
// ============================================================

// Composite Gauss-Legendre rule on an explicit interval: panels split at
// density kinks, and a power-law substitution u = z^shape on the leading
// segment when the densities are unbounded at the lower endpoint.
inline CompositeQuadrature make_mark_quadrature_on(const SignalDensityPair& pair, Interval box,
                                                   int n_q) {
  if (n_q < 8) throw std::invalid_argument("mark quadrature: n_q must be >= 8");
  std::vector<double> edges{box.lo};
  for (double b : pair.breakpoints())
    if (b > box.lo && b < box.hi) edges.push_back(b);
  edges.push_back(box.hi);

  const int order = 8;
  const GaussLegendre gl(order);
  const int panel_budget = std::max<int>(n_q / order, static_cast<int>(edges.size()) - 1);
  CompositeQuadrature q;

  const double total_width = box.hi - box.lo;
  for (std::size_t s = 0; s + 1 < edges.size(); ++s) {
    const double a = edges[s], b = edges[s + 1];
    int count = std::max(1, static_cast<int>(std::lround(panel_budget * (b - a) / total_width)));
    if (s == 0 && pair.singular_lower()) {
      // Integrands carry the factor z^(shape-1); in u = z^shape the measure
      // piece becomes du/shape and plain panels converge fast again.
      const double p = pair.singular_exponent();
      count = std::max(count, 4);
      const double ua = std::pow(a, p), ub = std::pow(b, p);
      CompositeQuadrature uq;
      uq.add_uniform(gl, ua, ub, count);
      for (std::size_t i = 0; i < uq.nodes.size(); ++i) {
        const double u = uq.nodes[i];
        const double z = std::pow(u, 1.0 / p);
        q.nodes.push_back(z);
        q.weights.push_back(uq.weights[i] * std::pow(u, (1.0 - p) / p) / p);
      }
    } else {
      q.add_uniform(gl, a, b, count);
    }
  }
  return q;
}

// The default rule used for every integral over the mark space: support
// truncated so each density carries at most tail_eps of mass per side.
inline CompositeQuadrature make_mark_quadrature(const SignalDensityPair& pair, int n_q = 128,
                                                double tail_eps = 1e-12) {
  return make_mark_quadrature_on(pair, pair.truncated_support(tail_eps), n_q);
}

}  // namespace bullbear
