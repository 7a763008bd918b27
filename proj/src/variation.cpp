#include "exoc/variation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace exoc {

namespace {

constexpr double kTieTol = 1e-12;
constexpr double kAffinityTol = 1e-10;

using Objective = std::function<double(const Vec&)>;

double axis_curvature(const Objective& H, Vec probe, int axis, double lo, double hi) {
  probe[axis] = lo;
  const double hl = H(probe);
  probe[axis] = 0.5 * (lo + hi);
  const double hm = H(probe);
  probe[axis] = hi;
  const double hh = H(probe);
  const double scale = std::max({std::abs(hl), std::abs(hm), std::abs(hh), 1.0});
  return std::abs(hl + hh - 2.0 * hm) / scale;
}

bool box_objective_is_affine(const Objective& H, const ControlSet& set) {
  const Vec mid = set.representative();
  for (int i = 0; i < set.dim(); ++i) {
    if (set.upper()[i] == set.lower()[i]) continue;
    if (axis_curvature(H, mid, i, set.lower()[i], set.upper()[i]) > kAffinityTol) {
      return false;
    }
  }
  // main diagonal catches multilinear cross terms that per-axis probes miss
  const double hl = H(set.lower());
  const double hm = H(mid);
  const double hh = H(set.upper());
  const double scale = std::max({std::abs(hl), std::abs(hm), std::abs(hh), 1.0});
  return std::abs(hl + hh - 2.0 * hm) / scale <= kAffinityTol;
}

HamiltonianMin box_bang_bang(const Objective& H, const ControlSet& set, const Vec* prefer) {
  Vec u = set.representative();
  for (int i = 0; i < set.dim(); ++i) {
    const double lo = set.lower()[i];
    const double hi = set.upper()[i];
    if (lo == hi) {
      u[i] = lo;
      continue;
    }
    Vec probe = set.representative();
    probe[i] = lo;
    const double hl = H(probe);
    probe[i] = hi;
    const double hh = H(probe);
    if (hh < hl) {
      u[i] = hi;
    } else if (hl < hh) {
      u[i] = lo;
    } else {
      u[i] = (prefer != nullptr) ? (*prefer)[i] : 0.5 * (lo + hi);
    }
  }
  return {u, H(u)};
}

HamiltonianMin box_grid_search(const Objective& H, const ControlSet& set, const Vec* prefer) {
  constexpr int kPoints = 33;
  constexpr int kHalvings = 10;
  const int m = set.dim();

  Vec best = (prefer != nullptr) ? *prefer : set.representative();
  double best_val = H(best);
  Vec window = set.upper() - set.lower();

  // corner pre-scan: coordinate descent alone stalls on saddle points of
  // multilinear objectives, whose minima sit at vertices
  if (m <= 6) {
    Vec corner(m);
    for (int mask = 0; mask < (1 << m); ++mask) {
      for (int i = 0; i < m; ++i) {
        corner[i] = ((mask >> i) & 1) ? set.upper()[i] : set.lower()[i];
      }
      const double v = H(corner);
      if (v < best_val) {
        best_val = v;
        best = corner;
      }
    }
  }

  const auto scan_axes = [&]() {
    for (int i = 0; i < m; ++i) {
      if (window[i] == 0.0) continue;
      const double lo = std::max(set.lower()[i], best[i] - 0.5 * window[i]);
      const double hi = std::min(set.upper()[i], best[i] + 0.5 * window[i]);
      Vec candidate = best;
      double axis_best = best_val;
      double axis_arg = best[i];
      for (int j = 0; j < kPoints; ++j) {
        candidate[i] = lo + (hi - lo) * static_cast<double>(j) / (kPoints - 1);
        const double v = H(candidate);
        if (v < axis_best) {
          axis_best = v;
          axis_arg = candidate[i];
        }
      }
      best[i] = axis_arg;
      best_val = axis_best;
    }
  };

  // full-window coordinate pass, then shrink around the incumbent
  scan_axes();
  for (int r = 0; r < kHalvings; ++r) {
    window *= 0.5;
    scan_axes();
  }
  return {best, best_val};
}

void require_on_horizon(const ControlProblem& p, const FieldView& field, const char* who) {
  if (!field.grid().same_as(p.horizon)) {
    throw DimensionMismatch(std::string(who) + ": control grid differs from the problem horizon");
  }
}

// Per-interval trapezoid rule matched to piecewise-constant controls: each
// interval contributes h/2 * (integrand at both endpoints under that
// interval's control value).
template <typename NodeFn>
double interval_trapezoid(const TimeGrid& g, const NodeFn& value_at) {
  const double h = g.h();
  double total = 0.0;
  for (int k = 0; k < g.n_steps(); ++k) {
    total += 0.5 * h * (value_at(k, k) + value_at(k, k + 1));
  }
  return total;
}

}  // namespace

double hamiltonian(const ControlProblem& p, double t, const Vec& x, const Vec& psi, const Vec& u) {
  if (psi.size() != p.state_dim || x.size() != p.state_dim) {
    throw DimensionMismatch("hamiltonian: state or costate dimension mismatch");
  }
  return psi.dot(p.dynamics(t, x, u));
}

double hamiltonian(const ControlProblem& p, double t, const Vec& x, const Vec& psi,
                   const std::vector<Vec>& atoms, const Eigen::VectorXd& weights) {
  if (weights.size() != static_cast<Eigen::Index>(atoms.size())) {
    throw DimensionMismatch("hamiltonian: weight/atom count mismatch");
  }
  double value = 0.0;
  for (size_t j = 0; j < atoms.size(); ++j) {
    const double w = weights[static_cast<Eigen::Index>(j)];
    if (w != 0.0) value += w * hamiltonian(p, t, x, psi, atoms[j]);
  }
  return value;
}

HamiltonianMin minimize_over_control_set(const ControlSet& set, const Objective& objective,
                                         const Vec* prefer) {
  HamiltonianMin result;
  if (set.kind() == ControlSet::Kind::Atoms) {
    double best = std::numeric_limits<double>::infinity();
    const Vec* arg = nullptr;
    for (const Vec& a : set.atom_list()) {
      const double v = objective(a);
      if (v < best) {
        best = v;
        arg = &a;
      }
    }
    result = {*arg, best};
  } else if (box_objective_is_affine(objective, set)) {
    result = box_bang_bang(objective, set, prefer);
  } else {
    result = box_grid_search(objective, set, prefer);
  }

  if (prefer != nullptr) {
    const double at_prefer = objective(*prefer);
    if (at_prefer - result.value < kTieTol) {
      return {*prefer, at_prefer};
    }
  }
  return result;
}

HamiltonianMin minimize_hamiltonian(const ControlProblem& p, double t, const Vec& x,
                                    const Vec& psi, const Vec* prefer) {
  if (psi.size() != p.state_dim) {
    throw DimensionMismatch("minimize_hamiltonian: costate dimension mismatch");
  }
  return minimize_over_control_set(
      p.control_set, [&](const Vec& u) { return psi.dot(p.dynamics(t, x, u)); }, prefer);
}

double total_cost(const ControlProblem& p, const FieldView& field, StepCounter* counter) {
  const Trajectory traj = integrate_flow(p, field, p.x0, 0, p.horizon.n_steps(), counter);
  return p.cost(traj.terminal());
}

double total_cost(const ControlProblem& p, const Control& u, StepCounter* counter) {
  return total_cost(p, FieldView::plain(u), counter);
}

IncrementReport exact_increment(const ControlProblem& p, const FieldView& u_ref,
                                const FieldView& u_target, StepCounter* counter) {
  require_on_horizon(p, u_ref, "exact_increment");
  require_on_horizon(p, u_target, "exact_increment");
  const TimeGrid& g = p.horizon;
  const int n = g.n_steps();

  const Trajectory x_target = integrate_flow(p, u_target, p.x0, 0, n, counter);
  const Trajectory x_ref = integrate_flow(p, u_ref, p.x0, 0, n, counter);

  const SuperAdjoint sa(p, u_ref, counter);
  std::vector<Vec> psi(static_cast<size_t>(n + 1));
  for (int k = 0; k <= n; ++k) {
    psi[static_cast<size_t>(k)] = sa.gradient(k, x_target.at_node(k));
  }

  const auto integrand = [&](int interval, int node) {
    const double t = g.node(node);
    const Vec& x = x_target.at_node(node);
    const Vec df = u_target.value(p, interval, t, x) - u_ref.value(p, interval, t, x);
    return psi[static_cast<size_t>(node)].dot(df);
  };

  IncrementReport report;
  report.predicted = interval_trapezoid(g, integrand);
  report.realized = p.cost(x_target.terminal()) - p.cost(x_ref.terminal());
  report.abs_gap = std::abs(report.predicted - report.realized);
  report.grid_h = g.h();
  return report;
}

IncrementReport exact_increment(const ControlProblem& p, const Control& u_ref,
                                const Control& u_target, StepCounter* counter) {
  return exact_increment(p, FieldView::plain(u_ref), FieldView::plain(u_target), counter);
}

double first_variation(const ControlProblem& p, const FieldView& u_ref, const FieldView& u_target,
                       StepCounter* counter) {
  require_on_horizon(p, u_ref, "first_variation");
  require_on_horizon(p, u_target, "first_variation");
  const TimeGrid& g = p.horizon;
  const Trajectory x_ref = integrate_flow(p, u_ref, p.x0, 0, g.n_steps(), counter);
  const Costate costate = integrate_adjoint(p, u_ref, x_ref, counter);

  const auto integrand = [&](int interval, int node) {
    const double t = g.node(node);
    const Vec& x = x_ref.at_node(node);
    const Vec df = u_target.value(p, interval, t, x) - u_ref.value(p, interval, t, x);
    return costate.at_node(node).dot(df);
  };
  return interval_trapezoid(g, integrand);
}

double first_variation(const ControlProblem& p, const Control& u_ref, const Control& u_target,
                       StepCounter* counter) {
  return first_variation(p, FieldView::plain(u_ref), FieldView::plain(u_target), counter);
}

double second_variation(const ControlProblem& p, const FieldView& u_ref,
                        const FieldView& u_target, StepCounter* counter) {
  if (!p.has_cost_hess()) {
    throw MissingHessian("second_variation: problem has no cost_hess callback");
  }
  require_on_horizon(p, u_ref, "second_variation");
  require_on_horizon(p, u_target, "second_variation");
  const TimeGrid& g = p.horizon;
  const int n = g.n_steps();
  const Trajectory x_ref = integrate_flow(p, u_ref, p.x0, 0, n, counter);
  const Costate costate = integrate_adjoint(p, u_ref, x_ref, counter);
  const RiccatiPath riccati = integrate_riccati(p, u_ref, x_ref, costate, counter);
  const std::vector<Vec> y = integrate_linearized(p, u_ref, u_target, x_ref, counter);

  const auto integrand = [&](int interval, int node) {
    const double t = g.node(node);
    const Vec& x = x_ref.at_node(node);
    const Vec df = u_target.value(p, interval, t, x) - u_ref.value(p, interval, t, x);
    const Mat dj = u_target.jacobian(p, interval, t, x) - u_ref.jacobian(p, interval, t, x);
    // Hessian of the cost-to-go is the negated stored Riccati matrix
    const Mat W = -riccati.at_node(node);
    const Vec lhs = W * df + dj.transpose() * costate.at_node(node);
    return lhs.dot(y[static_cast<size_t>(node)]);
  };
  return interval_trapezoid(g, integrand);
}

double second_variation(const ControlProblem& p, const Control& u_ref, const Control& u_target,
                        StepCounter* counter) {
  return second_variation(p, FieldView::plain(u_ref), FieldView::plain(u_target), counter);
}

PmpReport pmp_residual(const ControlProblem& p, const FieldView& u_ref, StepCounter* counter) {
  require_on_horizon(p, u_ref, "pmp_residual");
  const TimeGrid& g = p.horizon;
  const int n = g.n_steps();
  const Trajectory x_ref = integrate_flow(p, u_ref, p.x0, 0, n, counter);
  const Costate costate = integrate_adjoint(p, u_ref, x_ref, counter);

  PmpReport report;
  report.minimizer_per_node.resize(static_cast<size_t>(n + 1));
  report.h_ref.resize(static_cast<size_t>(n + 1));
  report.h_min.resize(static_cast<size_t>(n + 1));

  // The pointwise minimum depends only on (t, x, psi); compute it once per
  // node. The reported per-node reference Hamiltonian uses the control held
  // on interval min(k, n-1).
  double worst_gap = -1.0;
  for (int k = 0; k <= n; ++k) {
    const double t = g.node(k);
    const Vec& x = x_ref.at_node(k);
    const Vec& psi = costate.at_node(k);
    const HamiltonianMin hm = minimize_hamiltonian(p, t, x, psi, nullptr);
    report.h_ref[static_cast<size_t>(k)] = u_ref.hamiltonian(p, std::min(k, n - 1), t, x, psi);
    report.h_min[static_cast<size_t>(k)] = hm.value;
    report.minimizer_per_node[static_cast<size_t>(k)] = hm.argmin;
    const double gap = report.h_ref[static_cast<size_t>(k)] - hm.value;
    if (gap > worst_gap) {
      worst_gap = gap;
      report.worst_node = k;
    }
  }

  // Residual integral pairs each interval's endpoints with that interval's
  // control value, matching the increment quadrature convention.
  const auto integrand = [&](int interval, int node) {
    const double t = g.node(node);
    const Vec& x = x_ref.at_node(node);
    const Vec& psi = costate.at_node(node);
    const double h_ref = u_ref.hamiltonian(p, interval, t, x, psi);
    return std::max(0.0, h_ref - report.h_min[static_cast<size_t>(node)]);
  };
  report.residual = interval_trapezoid(g, integrand);
  return report;
}

PmpReport pmp_residual(const ControlProblem& p, const Control& u_ref, StepCounter* counter) {
  return pmp_residual(p, FieldView::plain(u_ref), counter);
}

}  // namespace exoc
