#include "exoc/super_adjoint.hpp"

namespace exoc {

double SuperAdjoint::value(int t_node, const Vec& x) const {
  const int last = reference_.grid().n_steps();
  const Trajectory tail = integrate_flow(*problem_, reference_, x, t_node, last, counter_);
  return problem_->cost(tail.terminal());
}

Vec SuperAdjoint::gradient(int t_node, const Vec& x) const {
  const int last = reference_.grid().n_steps();
  const Trajectory tail = integrate_flow(*problem_, reference_, x, t_node, last, counter_);
  if (t_node == last) {
    return problem_->cost_grad(x);
  }
  const Costate costate = integrate_adjoint(*problem_, reference_, tail, counter_);
  return costate.at_node(t_node);
}

Mat SuperAdjoint::hessian_fd(int t_node, const Vec& x) const {
  const int n = problem_->state_dim;
  const double step = 1e-4 * (1.0 + x.norm());
  Mat H(n, n);
  for (int j = 0; j < n; ++j) {
    Vec xp = x, xm = x;
    xp[j] += step;
    xm[j] -= step;
    H.col(j) = (gradient(t_node, xp) - gradient(t_node, xm)) / (2.0 * step);
  }
  return Mat(0.5 * (H + H.transpose()));
}

}  // namespace exoc
