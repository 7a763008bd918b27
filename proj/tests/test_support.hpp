#pragma once

#include "exoc/problem.hpp"
#include "exoc/scenario.hpp"

#include <random>

namespace exoc::test {

// dx = u dt on [0, T], terminal cost c . x (defaults to x itself)
inline ControlProblem make_integrator(double T = 1.0, int n_steps = 100, double lo = -1.0,
                                      double hi = 1.0) {
  ControlProblem p;
  p.state_dim = 1;
  p.control_dim = 1;
  p.dynamics = [](double, const Vec&, const Vec& u) { return u; };
  p.dynamics_jac_x = [](double, const Vec&, const Vec&) { return Mat(Mat::Zero(1, 1)); };
  p.cost = [](const Vec& x) { return x[0]; };
  p.cost_grad = [](const Vec&) { return Vec(Vec::Ones(1)); };
  p.cost_hess = [](const Vec&) { return Mat(Mat::Zero(1, 1)); };
  p.control_set = ControlSet::box(Vec::Constant(1, lo), Vec::Constant(1, hi));
  p.horizon = TimeGrid(0.0, T, n_steps);
  p.x0 = Vec::Zero(1);
  return p;
}

// dx = a x dt (control enters nowhere), terminal cost 0.5 x^2
inline ControlProblem make_scalar_linear(double a, double T = 1.0, int n_steps = 100) {
  ControlProblem p;
  p.state_dim = 1;
  p.control_dim = 1;
  p.dynamics = [a](double, const Vec& x, const Vec&) { return Vec(a * x); };
  p.dynamics_jac_x = [a](double, const Vec&, const Vec&) { return Mat(Mat::Constant(1, 1, a)); };
  p.cost = [](const Vec& x) { return 0.5 * x[0] * x[0]; };
  p.cost_grad = [](const Vec& x) { return x; };
  p.cost_hess = [](const Vec&) { return Mat(Mat::Identity(1, 1)); };
  p.control_set = ControlSet::box(Vec::Constant(1, -1.0), Vec::Constant(1, 1.0));
  p.horizon = TimeGrid(0.0, T, n_steps);
  p.x0 = Vec::Ones(1);
  return p;
}

// dx = (a x + u) dt, quadratic terminal cost around a target
inline ControlProblem make_scalar_affine(double a, double target, double T = 1.0,
                                         int n_steps = 100) {
  ControlProblem p;
  p.state_dim = 1;
  p.control_dim = 1;
  p.dynamics = [a](double, const Vec& x, const Vec& u) { return Vec(a * x + u); };
  p.dynamics_jac_x = [a](double, const Vec&, const Vec&) { return Mat(Mat::Constant(1, 1, a)); };
  p.cost = [target](const Vec& x) { return 0.5 * (x[0] - target) * (x[0] - target); };
  p.cost_grad = [target](const Vec& x) { return Vec(Vec::Constant(1, x[0] - target)); };
  p.cost_hess = [](const Vec&) { return Mat(Mat::Identity(1, 1)); };
  p.control_set = ControlSet::box(Vec::Constant(1, -1.0), Vec::Constant(1, 1.0));
  p.horizon = TimeGrid(0.0, T, n_steps);
  p.x0 = Vec::Constant(1, 0.8);
  return p;
}

// Van der Pol-type oscillator with additive control; genuinely nonlinear in
// the state, used where curvature of the flow matters.
inline ControlProblem make_vdp(double T = 1.5, int n_steps = 400) {
  ControlProblem p;
  p.state_dim = 2;
  p.control_dim = 1;
  p.dynamics = [](double, const Vec& x, const Vec& u) {
    Vec f(2);
    f << x[1], -x[0] + 0.8 * (1.0 - x[0] * x[0]) * x[1] + u[0];
    return f;
  };
  p.dynamics_jac_x = [](double, const Vec& x, const Vec&) {
    Mat J(2, 2);
    J << 0.0, 1.0, -1.0 - 1.6 * x[0] * x[1], 0.8 * (1.0 - x[0] * x[0]);
    return J;
  };
  p.cost = [](const Vec& x) { return 0.5 * x.squaredNorm(); };
  p.cost_grad = [](const Vec& x) { return x; };
  p.cost_hess = [](const Vec&) { return Mat(Mat::Identity(2, 2)); };
  p.control_set = ControlSet::box(Vec::Constant(1, -1.0), Vec::Constant(1, 1.0));
  p.horizon = TimeGrid(0.0, T, n_steps);
  p.x0 = Vec(2);
  p.x0 << 1.2, 0.0;
  return p;
}

inline Vec random_box_value(const ControlSet& set, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Vec u(set.dim());
  for (int i = 0; i < set.dim(); ++i) {
    u[i] = set.lower()[i] + unit(rng) * (set.upper()[i] - set.lower()[i]);
  }
  return u;
}

inline Control random_control(const ControlProblem& p, std::mt19937_64& rng) {
  std::vector<Vec> values(static_cast<size_t>(p.horizon.n_steps()));
  for (Vec& v : values) v = random_box_value(p.control_set, rng);
  return Control(p.horizon, std::move(values));
}

inline double rel_err(double got, double expected) {
  return std::abs(got - expected) / std::max(1.0, std::abs(expected));
}

}  // namespace exoc::test
