#include "exoc/grid.hpp"

#include <algorithm>
#include <cmath>

namespace exoc {

TimeGrid::TimeGrid(double t0, double T, int n_steps) : t0_(t0), T_(T), n_steps_(n_steps) {
  if (!(T > t0)) {
    throw Error("TimeGrid: T must exceed t0");
  }
  if (n_steps < 1) {
    throw Error("TimeGrid: n_steps must be >= 1");
  }
  h_ = (T - t0) / static_cast<double>(n_steps);
}

int TimeGrid::interval_of(double t) const {
  const int k = static_cast<int>(std::floor((t - t0_) / h_));
  return std::clamp(k, 0, n_steps_ - 1);
}

}  // namespace exoc
