#pragma once

#include "exoc/flow.hpp"
#include "exoc/super_adjoint.hpp"

#include <optional>
#include <vector>

namespace exoc {

/// Two sides of the exact increment identity on one control pair.
struct IncrementReport {
  double predicted = 0.0;  // quadrature of grad(cost-to-go) . field difference
  double realized = 0.0;   // cost(target endpoint) - cost(reference endpoint)
  double abs_gap = 0.0;    // |predicted - realized|
  double grid_h = 0.0;
};

/// Integrated gap between the reference Hamiltonian and its pointwise
/// minimum; zero characterizes an extremal on the grid.
struct PmpReport {
  double residual = 0.0;
  int worst_node = 0;
  std::vector<Vec> minimizer_per_node;  // one per grid node
  std::vector<double> h_ref;            // Hamiltonian at the reference control, per node
  std::vector<double> h_min;            // minimized Hamiltonian, per node
};

struct HamiltonianMin {
  Vec argmin;
  double value = 0.0;
};

/// psi . f(t, x, u).
double hamiltonian(const ControlProblem& p, double t, const Vec& x, const Vec& psi, const Vec& u);

/// Relaxed value: weighted sum of psi . f over the atoms.
double hamiltonian(const ControlProblem& p, double t, const Vec& x, const Vec& psi,
                   const std::vector<Vec>& atoms, const Eigen::VectorXd& weights);

/// Pointwise Hamiltonian minimization over the control set.
///
/// Atoms sets are minimized exhaustively. Boxes are probed for affinity of
/// u -> psi . f (three collinear points per axis plus the main diagonal,
/// relative curvature below 1e-10); affine boxes reduce to per-component
/// sign tests on the switching slopes, anything else falls back to a
/// coordinate grid search (33 points per axis, one refinement pass halving
/// the window 10 times).
///
/// When `prefer` is given and the best improvement over it is below 1e-12,
/// the preferred value is returned unchanged (chattering suppression).
HamiltonianMin minimize_hamiltonian(const ControlProblem& p, double t, const Vec& x,
                                    const Vec& psi, const Vec* prefer = nullptr);

/// The same minimizer for an arbitrary scalar objective over a control set;
/// shared by the ensemble Hamiltonians of the mean-field solvers.
HamiltonianMin minimize_over_control_set(const ControlSet& set,
                                         const std::function<double(const Vec&)>& objective,
                                         const Vec* prefer = nullptr);

/// Total cost of a control: integrate the trajectory and apply the terminal
/// cost.
double total_cost(const ControlProblem& p, const FieldView& field, StepCounter* counter = nullptr);
double total_cost(const ControlProblem& p, const Control& u, StepCounter* counter = nullptr);

/// Exact increment identity evaluated on a control pair: the predicted side
/// integrates the reference cost-to-go gradient against the field difference
/// along the *target* trajectory (composite trapezoid per interval); the
/// realized side is the plain cost difference. Both sides agree up to
/// quadrature error -- the identity is exact, not a first-order expansion.
IncrementReport exact_increment(const ControlProblem& p, const FieldView& u_ref,
                                const FieldView& u_target, StepCounter* counter = nullptr);
IncrementReport exact_increment(const ControlProblem& p, const Control& u_ref,
                                const Control& u_target, StepCounter* counter = nullptr);

/// First variation: same integrand frozen on the reference trajectory with
/// the classical costate.
double first_variation(const ControlProblem& p, const FieldView& u_ref, const FieldView& u_target,
                       StepCounter* counter = nullptr);
double first_variation(const ControlProblem& p, const Control& u_ref, const Control& u_target,
                       StepCounter* counter = nullptr);

/// Coefficient of eps^2 in the weak-variation expansion
/// cost(u_eps) - cost(u_ref), computed from the Riccati path (Hessian of the
/// cost-to-go), the costate and the linearized state deviation. Requires
/// cost_hess.
double second_variation(const ControlProblem& p, const FieldView& u_ref,
                        const FieldView& u_target, StepCounter* counter = nullptr);
double second_variation(const ControlProblem& p, const Control& u_ref, const Control& u_target,
                        StepCounter* counter = nullptr);

/// Integrated Pontryagin residual of a reference control.
PmpReport pmp_residual(const ControlProblem& p, const FieldView& u_ref,
                       StepCounter* counter = nullptr);
PmpReport pmp_residual(const ControlProblem& p, const Control& u_ref,
                       StepCounter* counter = nullptr);

}  // namespace exoc
