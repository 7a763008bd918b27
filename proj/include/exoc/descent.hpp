#pragma once

#include "exoc/variation.hpp"

#include <cstdint>
#include <utility>
#include <vector>

namespace exoc {

struct DescentConfig {
  int max_iters = 50;
  double cost_tol = 1e-9;   // stop when the cost decrease falls below this
  int stall_iters = 2;      // ... for this many consecutive iterations
  int sample_partition = 1; // sample-and-hold stride in grid intervals

  /// Probe the dynamics for state-affineness and, when it holds, evaluate
  /// the cost-to-go gradient through the precomposed affine flow maps
  /// instead of one flow+adjoint pair per query. Same quantity, one
  /// grid-sweep of work per iteration instead of O(n_steps^2).
  bool exploit_affine_structure = true;

  /// Record the Pontryagin residual of each iterate. Diagnostic only; its
  /// integration work is not added to the method's step counter.
  bool record_residuals = true;

  void validate() const;
};

struct DescentIteration {
  int iter = 0;
  double cost = 0.0;
  double predicted_decrease = 0.0;
  double realized_decrease = 0.0;
  double pmp_residual = 0.0;
  int resimulations = 0;           // full-horizon state rollouts this iteration
  std::int64_t steps_total = 0;    // cumulative counted integration steps
};

/// Per-iteration history of a descent run. Monotonicity
/// (realized_decrease >= -1e-10) holds on every shipped scenario.
struct DescentTrace {
  double initial_cost = 0.0;
  std::vector<DescentIteration> iterations;
  std::int64_t total_steps = 0;
};

struct DescentResult {
  Control control;
  DescentTrace trace;
  double final_cost = 0.0;
};

/// One feedback sweep: marches forward over blocks of `sample_partition`
/// intervals; at each block start freezes the reference cost-to-go gradient
/// at the current swept state, minimizes the Hamiltonian there (ties keep
/// the reference value), holds the minimizer across the block and continues
/// from the block's own endpoint. The produced pair closes the feedback loop
/// on the partition scale, and the predicted increment of the new control
/// against the reference is non-positive by construction.
std::pair<Control, Trajectory> comparison_control(const ControlProblem& p, const Control& u_ref,
                                                  const DescentConfig& config,
                                                  StepCounter* counter = nullptr);

/// Iterated comparison sweeps: a monotone, line-search-free minimizing
/// sequence. Stops when the cost decrease stays below cost_tol for
/// stall_iters consecutive iterations or at max_iters.
DescentResult solve(const ControlProblem& p, const Control& u_init, const DescentConfig& config);

/// Classical benchmark: conditional gradient on relaxed controls. The
/// descent direction minimizes the first variation frozen at the reference
/// pair, the step size comes from Armijo backtracking on the two-control
/// convex mixture, and every trial costs one full state rollout. Requires
/// control-affine dynamics on a box control set (the mixture then collapses
/// to an ordinary control).
DescentResult baseline_gradient_solve(const ControlProblem& p, const Control& u_init,
                                      const DescentConfig& config);

/// Probe utilities (seeded, deterministic). A handful of midpoint tests on
/// random states/controls; exact structure passes, anything else fails.
bool probe_state_affine(const ControlProblem& p);
bool probe_control_affine(const ControlProblem& p);

}  // namespace exoc
