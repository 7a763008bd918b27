#pragma once

#include "exoc/flow.hpp"

namespace exoc {

/// Cost-to-go of the frozen reference control and its spatial derivatives:
///
///   value(t, x)    = cost( flow of the reference from (t, x) to T )
///   gradient(t, x) = its spatial gradient, computed by integrating the
///                    adjoint ODE backward along the auxiliary trajectory
///                    through (t, x) -- exact to integrator order, one
///                    forward + one backward pass per query.
///   hessian_fd     = symmetrized central differences of gradient().
///
/// Along the reference trajectory itself, gradient() reproduces the
/// classical costate node-exactly. Queries are pure and may run
/// concurrently. Holds non-owning references; the problem and control must
/// outlive the object.
class SuperAdjoint {
 public:
  SuperAdjoint(const ControlProblem& p, FieldView reference, StepCounter* counter = nullptr)
      : problem_(&p), reference_(reference), counter_(counter) {}

  SuperAdjoint(const ControlProblem& p, const Control& reference, StepCounter* counter = nullptr)
      : SuperAdjoint(p, FieldView::plain(reference), counter) {}

  SuperAdjoint(const ControlProblem& p, const RelaxedControl& reference,
               StepCounter* counter = nullptr)
      : SuperAdjoint(p, FieldView::relaxed(reference), counter) {}

  double value(int t_node, const Vec& x) const;
  Vec gradient(int t_node, const Vec& x) const;
  Mat hessian_fd(int t_node, const Vec& x) const;

  const ControlProblem& problem() const { return *problem_; }
  const FieldView& reference() const { return reference_; }

 private:
  const ControlProblem* problem_;
  FieldView reference_;
  StepCounter* counter_;
};

}  // namespace exoc
