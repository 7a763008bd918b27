#pragma once

#include "exoc/types.hpp"

namespace exoc {

/// Uniform time grid t_k = t0 + k*h on [t0, T] with h = (T - t0) / n_steps.
/// Node k is always computed as t0 + k*h (never by accumulation) so that
/// sub-span integrations replay the exact same arithmetic as full-span ones.
class TimeGrid {
 public:
  TimeGrid(double t0, double T, int n_steps);

  double t0() const { return t0_; }
  double T() const { return T_; }
  int n_steps() const { return n_steps_; }
  int node_count() const { return n_steps_ + 1; }
  double h() const { return h_; }

  double node(int k) const { return t0_ + static_cast<double>(k) * h_; }

  /// Index of the interval [t_k, t_{k+1}) containing t, clamped to
  /// [0, n_steps - 1].
  int interval_of(double t) const;

  bool same_as(const TimeGrid& other) const {
    return t0_ == other.t0_ && T_ == other.T_ && n_steps_ == other.n_steps_;
  }

  /// Grid with the same span and n_steps * factor intervals.
  TimeGrid refined(int factor) const { return TimeGrid(t0_, T_, n_steps_ * factor); }

 private:
  double t0_;
  double T_;
  int n_steps_;
  double h_;
};

}  // namespace exoc
