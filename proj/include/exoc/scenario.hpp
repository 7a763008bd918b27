#pragma once

#include "exoc/config.hpp"
#include "exoc/meanfield.hpp"
#include "exoc/problem.hpp"

#include <string>
#include <vector>

namespace exoc {

/// A fully assembled problem instance: registry dynamics and cost bound to
/// the grid, control set, initial data and seed of one parsed config.
struct Scenario {
  std::string name;
  bool is_meanfield = false;
  unsigned seed = 0;
  ControlProblem problem;   // valid when !is_meanfield
  MeanFieldProblem mf;      // valid when is_meanfield
};

/// Built-in problem registry:
///   linear_scalar     dx = (a x + u) dt, quadratic terminal cost
///   bilinear          dx = u A x dt (2-D spiral), quadratic terminal cost
///   double_integrator dx1 = x2, dx2 = u, quadratic distance to a target
///   smooth_nonlinear  Van der Pol-type oscillator with additive control
///   mf_steering       F = u - (x - mean),   cost = int (x - target)^2 dmu
///   mf_interaction    F = u + k(mean - x) + b tanh(x),
///                     cost = int (x - a)^2 dmu + lambda mean^2
std::vector<std::string> scenario_names();

bool scenario_is_meanfield(const std::string& name);

/// Assembles a scenario; throws ConfigError for unknown names or
/// inconsistent dimensions.
Scenario build_scenario(const ScenarioConfig& cfg);

/// Constant control at the control-set representative (box midpoint or first
/// atom) -- the default starting point for the solvers.
Control default_initial_control(const Scenario& scenario);

}  // namespace exoc
