#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

namespace bullbear {

// Function values on a uniform rectangular grid: times 0..horizon (nt steps,
// nt+1 slices) by filter states 0..1 (nx nodes). Slices are stored
// contiguously, one row per time, and queried with bilinear interpolation.
class ValueSurface {
 public:
  ValueSurface(int nt_steps, int nx_nodes, double horizon)
      : nt_(nt_steps), nx_(nx_nodes), horizon_(horizon), v_(size_t(nt_steps + 1) * nx_nodes, 0.0) {
    if (nt_ < 1 || nx_ < 2 || !(horizon_ > 0.0))
      throw std::invalid_argument("surface: need nt >= 1, nx >= 2, horizon > 0");
  }

  int n_slices() const { return nt_ + 1; }
  int nt() const { return nt_; }
  int nx() const { return nx_; }
  double horizon() const { return horizon_; }
  double dt() const { return horizon_ / nt_; }
  double dx() const { return 1.0 / (nx_ - 1); }
  double t(int it) const { return horizon_ * it / nt_; }
  double x(int ix) const { return double(ix) / (nx_ - 1); }

  double& at(int it, int ix) { return v_[size_t(it) * nx_ + ix]; }
  double at(int it, int ix) const { return v_[size_t(it) * nx_ + ix]; }
  double* slice(int it) { return v_.data() + size_t(it) * nx_; }
  const double* slice(int it) const { return v_.data() + size_t(it) * nx_; }

  std::vector<double> x_grid() const {
    std::vector<double> g(nx_);
    for (int j = 0; j < nx_; ++j) g[j] = x(j);
    return g;
  }

  // Bilinear interpolation; the lerp form a + w*(b - a) reproduces constant
  // slices exactly. Arguments may overshoot the grid by a tiny rounding
  // margin, anything further out is an error.
  double value(double tq, double xq) const {
    const double ts = clamp_coord(tq / horizon_, "surface: t outside the grid") * nt_;
    const double xs = clamp_coord(xq, "surface: x outside the grid") * (nx_ - 1);
    const int it = cell_index(ts, nt_);
    const int ix = cell_index(xs, nx_ - 1);
    const double wt = ts - it, wx = xs - ix;
    const double lo = lerp(at(it, ix), at(it, ix + 1), wx);
    const double hi = lerp(at(it + 1, ix), at(it + 1, ix + 1), wx);
    return lerp(lo, hi, wt);
  }

  static double lerp(double a, double b, double w) { return a + w * (b - a); }

 private:
  static double clamp_coord(double u, const char* what) {
    if (!(u >= -1e-9) || !(u <= 1.0 + 1e-9)) throw std::invalid_argument(what);
    return u < 0.0 ? 0.0 : (u > 1.0 ? 1.0 : u);
  }
  static int cell_index(double s, int cells) {
    int i = int(s);
    if (i >= cells) i = cells - 1;  // top edge falls in the last cell
    return i;
  }

  int nt_, nx_;
  double horizon_;
  std::vector<double> v_;
};

}  // namespace bullbear
