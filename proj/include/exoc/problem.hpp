#pragma once

#include "exoc/control.hpp"
#include "exoc/grid.hpp"
#include "exoc/types.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace exoc {

/// Mayer problem: minimize cost(x(T)) over trajectories of
/// dx/dt = dynamics(t, x, u) with u valued in control_set.
///
/// Callbacks must be pure functions of their arguments; the library calls
/// them concurrently and relies on repeated calls returning identical values.
struct ControlProblem {
  int state_dim = 0;
  int control_dim = 0;
  std::function<Vec(double, const Vec&, const Vec&)> dynamics;        // f(t, x, u)
  std::function<Mat(double, const Vec&, const Vec&)> dynamics_jac_x;  // Df(t, x, u), state Jacobian
  std::function<double(const Vec&)> cost;                             // l(x)
  std::function<Vec(const Vec&)> cost_grad;                           // grad l(x)
  std::function<Mat(const Vec&)> cost_hess;                           // optional Hessian of l
  ControlSet control_set = ControlSet::box(Vec::Constant(1, -1.0), Vec::Constant(1, 1.0));
  TimeGrid horizon{0.0, 1.0, 1};
  Vec x0;  // initial state

  bool has_cost_hess() const { return static_cast<bool>(cost_hess); }

  void check_shapes() const;
};

/// Weighted field value of a relaxed control at time t:
/// sum_j w_j(t) * f(t, x, atom_j), with the interval index clamped to
/// [0, n_steps - 1].
Vec mean_field_value(const RelaxedControl& rc, double t,
                     const std::function<Vec(double, const Vec&, const Vec&)>& f, const Vec& x);

/// Cheap type-erased view over the admissible control representations, so
/// the integrators handle ordinary, relaxed and two-control convex-mixture
/// fields through one code path. Holds non-owning pointers.
class FieldView {
 public:
  static FieldView plain(const Control& c) {
    FieldView v;
    v.kind_ = Kind::Plain;
    v.a_ = &c;
    v.grid_ = &c.grid;
    return v;
  }
  static FieldView relaxed(const RelaxedControl& rc) {
    FieldView v;
    v.kind_ = Kind::Relaxed;
    v.rc_ = &rc;
    v.grid_ = &rc.grid;
    return v;
  }
  /// Convex mixture (1 - eps) * a + eps * b in the relaxed sense.
  static FieldView mix(const Control& a, const Control& b, double eps) {
    FieldView v;
    v.kind_ = Kind::Mix;
    v.a_ = &a;
    v.b_ = &b;
    v.eps_ = eps;
    v.grid_ = &a.grid;
    return v;
  }

  const TimeGrid& grid() const { return *grid_; }

  Vec value(const ControlProblem& p, int interval, double t, const Vec& x) const;
  Mat jacobian(const ControlProblem& p, int interval, double t, const Vec& x) const;

  /// Hamiltonian psi . f(t, x, u_interval) under this view.
  double hamiltonian(const ControlProblem& p, int interval, double t, const Vec& x,
                     const Vec& psi) const;

 private:
  enum class Kind { Plain, Relaxed, Mix };

  Kind kind_ = Kind::Plain;
  const Control* a_ = nullptr;
  const Control* b_ = nullptr;
  const RelaxedControl* rc_ = nullptr;
  double eps_ = 0.0;
  const TimeGrid* grid_ = nullptr;
};

struct ValidationIssue {
  std::string what;
};

/// Finite-difference validation of cost_grad (and cost_hess when present)
/// against the cost callback at seeded random probe points. Diagnostic
/// utility; never called from solver hot paths.
std::vector<ValidationIssue> validate_problem(const ControlProblem& p, unsigned seed = 0,
                                              int probes = 8, double rel_tol = 1e-5);

}  // namespace exoc
