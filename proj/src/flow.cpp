#include "exoc/flow.hpp"

#include <cmath>
#include <string>

namespace exoc {

namespace {

void require_finite(const Vec& v, const char* who, int node) {
  if (!v.allFinite()) {
    throw NonFiniteState(std::string(who) + ": non-finite value at node " + std::to_string(node));
  }
}

void require_finite(const Mat& m, const char* who, int node) {
  if (!m.allFinite()) {
    throw NonFiniteState(std::string(who) + ": non-finite value at node " + std::to_string(node));
  }
}

// State Hessian of x -> psi . f(t, x) by central differences of the Jacobian.
Mat hamiltonian_state_hessian(const ControlProblem& p, const FieldView& field, int interval,
                              double t, const Vec& x, const Vec& psi) {
  const int n = static_cast<int>(x.size());
  const double step = 1e-5 * (1.0 + x.norm());
  Mat H(n, n);
  for (int j = 0; j < n; ++j) {
    Vec xp = x, xm = x;
    xp[j] += step;
    xm[j] -= step;
    const Mat Jp = field.jacobian(p, interval, t, xp);
    const Mat Jm = field.jacobian(p, interval, t, xm);
    H.col(j) = (Jp - Jm).transpose() * psi / (2.0 * step);
  }
  return Mat(0.5 * (H + H.transpose()));
}

}  // namespace

HermiteRef::HermiteRef(const ControlProblem& p, const FieldView& field, const Trajectory& traj)
    : traj_(&traj), h_(traj.grid.h()) {
  const int m = static_cast<int>(traj.states.size()) - 1;
  f_left_.reserve(static_cast<size_t>(m));
  f_right_.reserve(static_cast<size_t>(m));
  for (int i = 0; i < m; ++i) {
    const int k = traj.first_node + i;
    f_left_.push_back(field.value(p, k, traj.grid.node(k), traj.at_node(k)));
    f_right_.push_back(field.value(p, k, traj.grid.node(k + 1), traj.at_node(k + 1)));
  }
}

Vec HermiteRef::state(int k, double theta) const {
  if (theta == 0.0) return traj_->at_node(k);
  if (theta == 1.0) return traj_->at_node(k + 1);
  const size_t i = static_cast<size_t>(k - traj_->first_node);
  const Vec& x0 = traj_->at_node(k);
  const Vec& x1 = traj_->at_node(k + 1);
  const double t2 = theta * theta;
  const double t3 = t2 * theta;
  return (2.0 * t3 - 3.0 * t2 + 1.0) * x0 + (t3 - 2.0 * t2 + theta) * h_ * f_left_[i] +
         (-2.0 * t3 + 3.0 * t2) * x1 + (t3 - t2) * h_ * f_right_[i];
}

Trajectory integrate_flow(const ControlProblem& p, const FieldView& field, const Vec& x0, int from,
                          int to, StepCounter* counter) {
  const TimeGrid& g = field.grid();
  if (from > to || from < 0 || to > g.n_steps()) {
    throw Error("integrate_flow: invalid node span");
  }
  if (x0.size() != p.state_dim) {
    throw DimensionMismatch("integrate_flow: x0 dimension != state_dim");
  }
  Trajectory traj{g, from, {}};
  traj.states.reserve(static_cast<size_t>(to - from + 1));
  traj.states.push_back(x0);
  require_finite(x0, "integrate_flow", from);

  const double h = g.h();
  Vec x = x0;
  for (int k = from; k < to; ++k) {
    const double t = g.node(k);
    const Vec k1 = field.value(p, k, t, x);
    const Vec k2 = field.value(p, k, t + 0.5 * h, x + 0.5 * h * k1);
    const Vec k3 = field.value(p, k, t + 0.5 * h, x + 0.5 * h * k2);
    const Vec k4 = field.value(p, k, t + h, x + h * k3);
    x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    require_finite(x, "integrate_flow", k + 1);
    traj.states.push_back(x);
    if (counter) counter->add(1);
  }
  return traj;
}

Trajectory integrate_flow(const ControlProblem& p, const Control& u, const Vec& x0, int from,
                          int to, StepCounter* counter) {
  return integrate_flow(p, FieldView::plain(u), x0, from, to, counter);
}

Trajectory integrate_flow(const ControlProblem& p, const RelaxedControl& u, const Vec& x0,
                          int from, int to, StepCounter* counter) {
  return integrate_flow(p, FieldView::relaxed(u), x0, from, to, counter);
}

std::vector<Vec> integrate_variational(const ControlProblem& p, const FieldView& field,
                                       const Trajectory& ref, const Vec& w0, int from, int to,
                                       StepCounter* counter) {
  if (!ref.covers(from, to)) {
    throw Error("integrate_variational: trajectory does not cover the requested span");
  }
  const TimeGrid& g = ref.grid;
  const double h = g.h();
  const HermiteRef interp(p, field, ref);

  std::vector<Vec> out;
  out.reserve(static_cast<size_t>(to - from + 1));
  out.push_back(w0);
  Vec w = w0;
  for (int k = from; k < to; ++k) {
    const double t = g.node(k);
    const Mat J0 = field.jacobian(p, k, t, ref.at_node(k));
    const Mat Jm = field.jacobian(p, k, t + 0.5 * h, interp.state(k, 0.5));
    const Mat J1 = field.jacobian(p, k, t + h, ref.at_node(k + 1));
    const Vec k1 = J0 * w;
    const Vec k2 = Jm * (w + 0.5 * h * k1);
    const Vec k3 = Jm * (w + 0.5 * h * k2);
    const Vec k4 = J1 * (w + h * k3);
    w += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    require_finite(w, "integrate_variational", k + 1);
    out.push_back(w);
    if (counter) counter->add(1);
  }
  return out;
}

Costate integrate_adjoint(const ControlProblem& p, const FieldView& field, const Trajectory& ref,
                          const Vec& terminal, StepCounter* counter) {
  const TimeGrid& g = ref.grid;
  const double h = g.h();
  const int lo = ref.first_node;
  const int hi = ref.last_node();
  const HermiteRef interp(p, field, ref);

  Costate costate{g, lo, std::vector<Vec>(static_cast<size_t>(hi - lo + 1))};
  costate.values.back() = terminal;
  require_finite(terminal, "integrate_adjoint", hi);

  Vec pv = terminal;
  for (int k = hi - 1; k >= lo; --k) {
    const double t = g.node(k);
    const Mat J1 = field.jacobian(p, k, t + h, ref.at_node(k + 1));
    const Mat Jm = field.jacobian(p, k, t + 0.5 * h, interp.state(k, 0.5));
    const Mat J0 = field.jacobian(p, k, t, ref.at_node(k));
    // backward step of dp/dt = -J(t)^T p, from t_{k+1} to t_k
    const Vec k1 = -(J1.transpose() * pv);
    const Vec k2 = -(Jm.transpose() * (pv - 0.5 * h * k1));
    const Vec k3 = -(Jm.transpose() * (pv - 0.5 * h * k2));
    const Vec k4 = -(J0.transpose() * (pv - h * k3));
    pv -= (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    require_finite(pv, "integrate_adjoint", k);
    costate.values[static_cast<size_t>(k - lo)] = pv;
    if (counter) counter->add(1);
  }
  return costate;
}

Costate integrate_adjoint(const ControlProblem& p, const FieldView& field, const Trajectory& ref,
                          StepCounter* counter) {
  return integrate_adjoint(p, field, ref, Vec(p.cost_grad(ref.terminal())), counter);
}

Costate integrate_adjoint(const ControlProblem& p, const Control& u, const Trajectory& ref,
                          StepCounter* counter) {
  return integrate_adjoint(p, FieldView::plain(u), ref, counter);
}

RiccatiPath integrate_riccati(const ControlProblem& p, const FieldView& field,
                              const Trajectory& ref, const Costate& costate,
                              const Mat& terminal_hessian, StepCounter* counter) {
  const TimeGrid& g = ref.grid;
  const double h = g.h();
  const int lo = ref.first_node;
  const int hi = ref.last_node();
  const HermiteRef interp(p, field, ref);

  // Hermite interpolation of the costate; its derivative at nodes is -J^T p.
  const auto costate_mid = [&](int k, const Mat& J0, const Mat& J1) -> Vec {
    const Vec& p0 = costate.at_node(k);
    const Vec& p1 = costate.at_node(k + 1);
    const Vec d0 = -(J0.transpose() * p0);
    const Vec d1 = -(J1.transpose() * p1);
    return 0.5 * (p0 + p1) + (h / 8.0) * (d0 - d1);
  };

  RiccatiPath path{g, lo, std::vector<Mat>(static_cast<size_t>(hi - lo + 1))};
  Mat P = 0.5 * (terminal_hessian + terminal_hessian.transpose());
  path.matrices.back() = P;
  require_finite(P, "integrate_riccati", hi);

  for (int k = hi - 1; k >= lo; --k) {
    const double t = g.node(k);
    const double tm = t + 0.5 * h;
    const Mat J0 = field.jacobian(p, k, t, ref.at_node(k));
    const Mat J1 = field.jacobian(p, k, t + h, ref.at_node(k + 1));
    const Mat Jm = field.jacobian(p, k, tm, interp.state(k, 0.5));
    const Vec pmid = costate_mid(k, J0, J1);

    const Mat S1 = hamiltonian_state_hessian(p, field, k, t + h, ref.at_node(k + 1),
                                             costate.at_node(k + 1));
    const Mat Sm = hamiltonian_state_hessian(p, field, k, tm, interp.state(k, 0.5), pmid);
    const Mat S0 = hamiltonian_state_hessian(p, field, k, t, ref.at_node(k), costate.at_node(k));

    const auto rhs = [](const Mat& J, const Mat& S, const Mat& P_) -> Mat {
      return Mat(-J.transpose() * P_ - P_ * J + S);
    };
    // backward step of dP/dt = -J^T P - P J + S, from t_{k+1} to t_k
    const Mat k1 = rhs(J1, S1, P);
    const Mat k2 = rhs(Jm, Sm, Mat(P - 0.5 * h * k1));
    const Mat k3 = rhs(Jm, Sm, Mat(P - 0.5 * h * k2));
    const Mat k4 = rhs(J0, S0, Mat(P - h * k3));
    P -= (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    P = 0.5 * (P + P.transpose());
    require_finite(P, "integrate_riccati", k);
    path.matrices[static_cast<size_t>(k - lo)] = P;
    if (counter) counter->add(p.state_dim);
  }
  return path;
}

RiccatiPath integrate_riccati(const ControlProblem& p, const FieldView& field,
                              const Trajectory& ref, const Costate& costate,
                              StepCounter* counter) {
  if (!p.has_cost_hess()) {
    throw MissingHessian("integrate_riccati: problem has no cost_hess callback");
  }
  const Mat terminal = -p.cost_hess(ref.terminal());
  return integrate_riccati(p, field, ref, costate, terminal, counter);
}

std::vector<Vec> integrate_linearized(const ControlProblem& p, const FieldView& ref_field,
                                      const FieldView& target_field, const Trajectory& ref,
                                      StepCounter* counter) {
  if (!ref_field.grid().same_as(target_field.grid())) {
    throw DimensionMismatch("integrate_linearized: controls live on different grids");
  }
  const TimeGrid& g = ref.grid;
  const double h = g.h();
  const int lo = ref.first_node;
  const int hi = ref.last_node();
  const HermiteRef interp(p, ref_field, ref);

  const auto drift = [&](int k, double t, const Vec& x) -> Vec {
    return Vec(target_field.value(p, k, t, x) - ref_field.value(p, k, t, x));
  };

  std::vector<Vec> out;
  out.reserve(static_cast<size_t>(hi - lo + 1));
  Vec y = Vec::Zero(p.state_dim);
  out.push_back(y);
  for (int k = lo; k < hi; ++k) {
    const double t = g.node(k);
    const double tm = t + 0.5 * h;
    const Vec xm = interp.state(k, 0.5);
    const Mat J0 = ref_field.jacobian(p, k, t, ref.at_node(k));
    const Mat Jm = ref_field.jacobian(p, k, tm, xm);
    const Mat J1 = ref_field.jacobian(p, k, t + h, ref.at_node(k + 1));
    const Vec d0 = drift(k, t, ref.at_node(k));
    const Vec dm = drift(k, tm, xm);
    const Vec d1 = drift(k, t + h, ref.at_node(k + 1));
    const Vec k1 = J0 * y + d0;
    const Vec k2 = Jm * (y + 0.5 * h * k1) + dm;
    const Vec k3 = Jm * (y + 0.5 * h * k2) + dm;
    const Vec k4 = J1 * (y + h * k3) + d1;
    y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    require_finite(y, "integrate_linearized", k + 1);
    out.push_back(y);
    if (counter) counter->add(1);
  }
  return out;
}

}  // namespace exoc
