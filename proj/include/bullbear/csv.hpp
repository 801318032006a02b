#pragma once

#include <locale>
#include <ostream>
#include <sstream>
#include <vector>

#include "filter.hpp"
#include "simulate.hpp"
#include "strategy.hpp"
#include "surface.hpp"

// Plot-ready CSV exports. Every writer emits a header row, uses '.' as the
// decimal separator regardless of the process locale, and prints doubles at
// round-trip precision, so identical inputs produce byte-identical files.

namespace bullbear {
namespace csv {

inline void prepare(std::ostream& os) {
  os.imbue(std::locale::classic());
  os.precision(17);
}

// Rows are time nodes, one column per spatial node. Column labels are
// rounded for readability; the data keep full round-trip precision.
inline void write_surface(std::ostream& os, const ValueSurface& s) {
  prepare(os);
  os << "t";
  {
    std::ostringstream head;
    prepare(head);
    head.precision(10);
    for (int j = 0; j < s.nx(); ++j) head << ",x_" << s.x(j);
    os << head.str();
  }
  os << "\n";
  for (int it = 0; it <= s.nt(); ++it) {
    os << s.t(it);
    for (int j = 0; j < s.nx(); ++j) os << "," << s.at(it, j);
    os << "\n";
  }
}

// One simulated path; pass the filter values to fill the pi column.
inline void write_world(std::ostream& os, const WorldPath& w, const std::vector<double>& pi) {
  prepare(os);
  os << "t,alpha,S,pi\n";
  for (std::size_t k = 0; k < w.S.size(); ++k) {
    const double t = static_cast<double>(k) * w.dt;
    os << t << "," << w.alpha[k] << "," << w.S[k] << ","
       << (k < pi.size() ? pi[k] : std::numeric_limits<double>::quiet_NaN()) << "\n";
  }
}

inline void write_events(std::ostream& os, const std::vector<SignalEvent>& events) {
  prepare(os);
  os << "event_time,mark\n";
  for (const auto& e : events) os << e.time << "," << e.mark << "\n";
}

inline void write_curve(std::ostream& os, const char* name, const std::vector<double>& t,
                        const std::vector<double>& value) {
  prepare(os);
  os << "t," << name << "\n";
  const std::size_t n = std::min(t.size(), value.size());
  for (std::size_t k = 0; k < n; ++k) os << t[k] << "," << value[k] << "\n";
}

// Feedback controls per unit wealth over the solved grid.
inline void write_strategy(std::ostream& os, const StrategyField& field, const ValueSurface& grid) {
  prepare(os);
  os << "t,x,invest_fraction,consume_fraction\n";
  for (int it = 0; it <= grid.nt(); ++it) {
    const double t = grid.t(it);
    for (int j = 0; j < grid.nx(); ++j) {
      const double x = grid.x(j);
      os << t << "," << x << "," << field.invest_fraction(t, x) << ","
         << field.consume_fraction(t, x) << "\n";
    }
  }
}

}  // namespace csv
}  // namespace bullbear
