#include "exoc/problem.hpp"

#include <cmath>
#include <random>

namespace exoc {

void ControlProblem::check_shapes() const {
  if (state_dim < 1 || state_dim > kMaxDim) {
    throw DimensionMismatch("ControlProblem: state_dim out of range [1, " +
                            std::to_string(kMaxDim) + "]");
  }
  if (control_dim < 1 || control_dim > kMaxDim) {
    throw DimensionMismatch("ControlProblem: control_dim out of range");
  }
  if (!dynamics || !dynamics_jac_x || !cost || !cost_grad) {
    throw Error("ControlProblem: dynamics, dynamics_jac_x, cost and cost_grad are required");
  }
  if (control_set.dim() != control_dim) {
    throw DimensionMismatch("ControlProblem: control_set dimension != control_dim");
  }
  if (x0.size() != state_dim) {
    throw DimensionMismatch("ControlProblem: x0 dimension != state_dim");
  }
  const Vec x = Vec::Zero(state_dim);
  const Vec u = control_set.representative();
  const double t = horizon.t0();
  if (dynamics(t, x, u).size() != state_dim) {
    throw DimensionMismatch("ControlProblem: dynamics output dimension != state_dim");
  }
  const Mat J = dynamics_jac_x(t, x, u);
  if (J.rows() != state_dim || J.cols() != state_dim) {
    throw DimensionMismatch("ControlProblem: dynamics_jac_x must be state_dim x state_dim");
  }
  if (cost_grad(x).size() != state_dim) {
    throw DimensionMismatch("ControlProblem: cost_grad output dimension != state_dim");
  }
}

Vec mean_field_value(const RelaxedControl& rc, double t,
                     const std::function<Vec(double, const Vec&, const Vec&)>& f, const Vec& x) {
  const int k = rc.grid.interval_of(t);
  const Eigen::VectorXd& w = rc.weights[static_cast<size_t>(k)];
  Vec out;
  bool first = true;
  for (size_t j = 0; j < rc.atoms.size(); ++j) {
    const double wj = w[static_cast<Eigen::Index>(j)];
    if (wj == 0.0) continue;
    if (first) {
      out = wj * f(t, x, rc.atoms[j]);
      first = false;
    } else {
      out += wj * f(t, x, rc.atoms[j]);
    }
  }
  if (first) {
    // all-zero row cannot occur for a valid RelaxedControl, but stay total
    out = Vec::Zero(x.size());
  }
  return out;
}

Vec FieldView::value(const ControlProblem& p, int interval, double t, const Vec& x) const {
  switch (kind_) {
    case Kind::Plain:
      return p.dynamics(t, x, a_->at_interval(interval));
    case Kind::Mix: {
      const Vec fa = p.dynamics(t, x, a_->at_interval(interval));
      const Vec fb = p.dynamics(t, x, b_->at_interval(interval));
      return (1.0 - eps_) * fa + eps_ * fb;
    }
    case Kind::Relaxed: {
      const Eigen::VectorXd& w = rc_->weights[static_cast<size_t>(interval)];
      Vec out = Vec::Zero(x.size());
      for (size_t j = 0; j < rc_->atoms.size(); ++j) {
        const double wj = w[static_cast<Eigen::Index>(j)];
        if (wj != 0.0) out += wj * p.dynamics(t, x, rc_->atoms[j]);
      }
      return out;
    }
  }
  return Vec();
}

Mat FieldView::jacobian(const ControlProblem& p, int interval, double t, const Vec& x) const {
  switch (kind_) {
    case Kind::Plain:
      return p.dynamics_jac_x(t, x, a_->at_interval(interval));
    case Kind::Mix: {
      const Mat Ja = p.dynamics_jac_x(t, x, a_->at_interval(interval));
      const Mat Jb = p.dynamics_jac_x(t, x, b_->at_interval(interval));
      return (1.0 - eps_) * Ja + eps_ * Jb;
    }
    case Kind::Relaxed: {
      const Eigen::VectorXd& w = rc_->weights[static_cast<size_t>(interval)];
      Mat out = Mat::Zero(x.size(), x.size());
      for (size_t j = 0; j < rc_->atoms.size(); ++j) {
        const double wj = w[static_cast<Eigen::Index>(j)];
        if (wj != 0.0) out += wj * p.dynamics_jac_x(t, x, rc_->atoms[j]);
      }
      return out;
    }
  }
  return Mat();
}

double FieldView::hamiltonian(const ControlProblem& p, int interval, double t, const Vec& x,
                              const Vec& psi) const {
  return psi.dot(value(p, interval, t, x));
}

std::vector<ValidationIssue> validate_problem(const ControlProblem& p, unsigned seed, int probes,
                                              double rel_tol) {
  std::vector<ValidationIssue> issues;
  p.check_shapes();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);

  for (int q = 0; q < probes; ++q) {
    Vec x(p.state_dim);
    for (int i = 0; i < p.state_dim; ++i) x[i] = unit(rng);
    const Vec g = p.cost_grad(x);
    const double scale = 1.0 + x.norm();
    const double step = 1e-6 * scale;
    double worst = 0.0;
    Vec fd(p.state_dim);
    for (int i = 0; i < p.state_dim; ++i) {
      Vec xp = x, xm = x;
      xp[i] += step;
      xm[i] -= step;
      fd[i] = (p.cost(xp) - p.cost(xm)) / (2.0 * step);
    }
    const double denom = std::max(1.0, g.norm());
    worst = (fd - g).norm() / denom;
    if (worst > rel_tol) {
      issues.push_back({"cost_grad disagrees with finite differences of cost at probe " +
                        std::to_string(q) + " (relative error " + std::to_string(worst) + ")"});
    }
    if (p.has_cost_hess()) {
      const Mat H = p.cost_hess(x);
      Mat fdh(p.state_dim, p.state_dim);
      for (int i = 0; i < p.state_dim; ++i) {
        Vec xp = x, xm = x;
        xp[i] += step;
        xm[i] -= step;
        fdh.col(i) = (p.cost_grad(xp) - p.cost_grad(xm)) / (2.0 * step);
      }
      const double hd = (0.5 * (fdh + fdh.transpose()) - H).norm() / std::max(1.0, H.norm());
      if (hd > 1e-4) {
        issues.push_back({"cost_hess disagrees with finite differences of cost_grad at probe " +
                          std::to_string(q)});
      }
    }
  }
  return issues;
}

}  // namespace exoc
