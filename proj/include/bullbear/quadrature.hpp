#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace bullbear {

// Gauss-Legendre nodes and weights on [-1, 1].
// Newton iteration on P_n with the asymptotic root estimate as start value;
// accurate to machine precision for the small orders used here.
struct GaussLegendre {
  std::vector<double> x;
  std::vector<double> w;

  explicit GaussLegendre(int n) {
    if (n < 1) throw std::invalid_argument("GaussLegendre: order must be >= 1");
    x.resize(n);
    w.resize(n);
    const int m = (n + 1) / 2;
    for (int i = 0; i < m; ++i) {
      double z = std::cos(M_PI * (i + 0.75) / (n + 0.5));
      double pp = 0.0;
      for (int it = 0; it < 100; ++it) {
        double p0 = 1.0, p1 = 0.0;
        for (int j = 0; j < n; ++j) {
          const double p2 = p1;
          p1 = p0;
          p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
        }
        pp = n * (z * p0 - p1) / (z * z - 1.0);
        const double dz = p0 / pp;
        z -= dz;
        if (std::abs(dz) < 1e-15) break;
      }
      x[i] = -z;
      x[n - 1 - i] = z;
      w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
      w[n - 1 - i] = w[i];
    }
  }
};

// Fixed set of nodes and weights for integrals over a union of panels.
// Panels may be graded geometrically toward an endpoint where the integrand
// is integrable but unbounded.
struct CompositeQuadrature {
  std::vector<double> nodes;
  std::vector<double> weights;

  void add_panel(const GaussLegendre& gl, double a, double b) {
    const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    for (std::size_t i = 0; i < gl.x.size(); ++i) {
      nodes.push_back(mid + half * gl.x[i]);
      weights.push_back(half * gl.w[i]);
    }
  }

  // Splits [a, b] into `count` equal panels.
  void add_uniform(const GaussLegendre& gl, double a, double b, int count) {
    for (int k = 0; k < count; ++k)
      add_panel(gl, a + (b - a) * k / count, a + (b - a) * (k + 1) / count);
  }

  // Splits [a, b] into `count` panels whose widths shrink geometrically
  // toward a (toward b if `toward_right`). Ratio 2 halves each panel.
  void add_graded(const GaussLegendre& gl, double a, double b, int count,
                  bool toward_right, double ratio = 2.0) {
    std::vector<double> edges(count + 1);
    double width = 1.0, total = 0.0;
    std::vector<double> widths(count);
    for (int k = 0; k < count; ++k) {
      widths[k] = width;
      total += width;
      width /= ratio;
    }
    // widths[0] is the largest; orient so small panels sit at the graded end.
    edges[0] = a;
    for (int k = 0; k < count; ++k) {
      const double wk = toward_right ? widths[k] : widths[count - 1 - k];
      edges[k + 1] = edges[k] + (b - a) * wk / total;
    }
    edges[count] = b;
    for (int k = 0; k < count; ++k) add_panel(gl, edges[k], edges[k + 1]);
  }

  template <typename F>
  double integrate(F&& f) const {
    double acc = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i) acc += weights[i] * f(nodes[i]);
    return acc;
  }

  std::size_t size() const { return nodes.size(); }
};

}  // namespace bullbear
