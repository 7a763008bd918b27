#pragma once

#include "exoc/problem.hpp"

#include <vector>

namespace exoc {

/// State samples on grid nodes first_node .. first_node + size - 1.
/// Full-horizon trajectories have first_node = 0 and one state per node.
struct Trajectory {
  TimeGrid grid;
  int first_node = 0;
  std::vector<Vec> states;

  int last_node() const { return first_node + static_cast<int>(states.size()) - 1; }
  const Vec& at_node(int k) const { return states[static_cast<size_t>(k - first_node)]; }
  bool covers(int from, int to) const { return first_node <= from && to <= last_node(); }
  const Vec& terminal() const { return states.back(); }
};

struct Costate {
  TimeGrid grid;
  int first_node = 0;
  std::vector<Vec> values;

  int last_node() const { return first_node + static_cast<int>(values.size()) - 1; }
  const Vec& at_node(int k) const { return values[static_cast<size_t>(k - first_node)]; }
};

/// Symmetric matrix path P(t_k); symmetrized after every step.
struct RiccatiPath {
  TimeGrid grid;
  int first_node = 0;
  std::vector<Mat> matrices;

  const Mat& at_node(int k) const { return matrices[static_cast<size_t>(k - first_node)]; }
};

/// Classical RK4 with one step per grid interval, under the control held by
/// `field` on each interval. Sub-spans replay the exact per-interval step
/// sequence of the full horizon, so flow composition is node-exact:
/// integrating s -> tau and then tau -> t gives bitwise the same nodes as
/// s -> t.
Trajectory integrate_flow(const ControlProblem& p, const FieldView& field, const Vec& x0, int from,
                          int to, StepCounter* counter = nullptr);

Trajectory integrate_flow(const ControlProblem& p, const Control& u, const Vec& x0, int from,
                          int to, StepCounter* counter = nullptr);
Trajectory integrate_flow(const ControlProblem& p, const RelaxedControl& u, const Vec& x0,
                          int from, int to, StepCounter* counter = nullptr);

/// Linear variational equation dw/dt = Df(t, x_ref(t)) w along the stored
/// reference trajectory; inter-node reference states come from cubic Hermite
/// interpolation, keeping fourth order. Returns w on nodes from..to.
std::vector<Vec> integrate_variational(const ControlProblem& p, const FieldView& field,
                                       const Trajectory& ref, const Vec& w0, int from, int to,
                                       StepCounter* counter = nullptr);

/// Backward adjoint ODE dp/dt = -Df(t, x_ref(t))^T p from p(last) = terminal
/// down to the trajectory's first node.
Costate integrate_adjoint(const ControlProblem& p, const FieldView& field, const Trajectory& ref,
                          const Vec& terminal, StepCounter* counter = nullptr);

/// Terminal defaults to cost_grad at the trajectory endpoint.
Costate integrate_adjoint(const ControlProblem& p, const FieldView& field, const Trajectory& ref,
                          StepCounter* counter = nullptr);
Costate integrate_adjoint(const ControlProblem& p, const Control& u, const Trajectory& ref,
                          StepCounter* counter = nullptr);

/// Backward matrix equation
///   dP/dt = -Df^T P - P Df + D2H(t),  P(T) = terminal_hessian,
/// where D2H is the state Hessian of x -> costate(t) . f(t, x) obtained by
/// central differences of dynamics_jac_x with step 1e-5 * (1 + |x|).
///
/// With terminal_hessian = -cost_hess(x(T)) the solution satisfies
/// P(t) = -D2 p_t(x_ref(t)), the negated Hessian of the cost-to-go under the
/// frozen control; the sign convention is pinned by that cross-check.
RiccatiPath integrate_riccati(const ControlProblem& p, const FieldView& field,
                              const Trajectory& ref, const Costate& costate,
                              const Mat& terminal_hessian, StepCounter* counter = nullptr);

/// Terminal from -cost_hess(x(T)); throws MissingHessian when the problem
/// has no Hessian callback.
RiccatiPath integrate_riccati(const ControlProblem& p, const FieldView& field,
                              const Trajectory& ref, const Costate& costate,
                              StepCounter* counter = nullptr);

/// Forward linearized equation
///   dy/dt = Df_ref(t, x_ref) y + [f_target - f_ref](t, x_ref),  y(first) = 0,
/// along the reference trajectory. Returns y on all trajectory nodes.
std::vector<Vec> integrate_linearized(const ControlProblem& p, const FieldView& ref_field,
                                      const FieldView& target_field, const Trajectory& ref,
                                      StepCounter* counter = nullptr);

/// Cubic Hermite interpolant of a stored trajectory; derivative values are
/// the field evaluated at interval endpoints under the interval's control.
class HermiteRef {
 public:
  HermiteRef(const ControlProblem& p, const FieldView& field, const Trajectory& traj);

  /// State at t_k + theta * h within interval k; theta in [0, 1].
  Vec state(int k, double theta) const;

  const Trajectory& trajectory() const { return *traj_; }

 private:
  const Trajectory* traj_;
  double h_;
  // per interval: field at the left and right endpoint under that interval's control
  std::vector<Vec> f_left_, f_right_;
};

}  // namespace exoc
