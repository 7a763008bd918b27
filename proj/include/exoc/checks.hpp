#pragma once

#include "exoc/scenario.hpp"

#include <string>
#include <vector>

namespace exoc {

struct CheckResult {
  std::string name;
  bool passed = false;
  double measured = 0.0;   // the quantity the check bounds
  double threshold = 0.0;  // its documented bound ("larger is better" checks negate)
  std::string note;
};

/// The invariant battery behind `check`: increment exactness, duality
/// constancy, gradient/adjoint coincidence, Riccati/Hessian consistency,
/// Taylor regression, and gradient validation for classical scenarios;
/// validation, pairing conservation, increment exactness and duality
/// constancy for mean-field ones. Tolerances assume the shipped grid sizes
/// (quadrature-limited checks scale their bound with h^2).
std::vector<CheckResult> run_checks(const Scenario& scenario);

/// Least-squares slope of log|y| against log(x); the Taylor-regression
/// statistic.
double log_log_slope(const std::vector<double>& x, const std::vector<double>& y);

std::string checks_to_table(const std::vector<CheckResult>& results);
std::string checks_to_json(const std::vector<CheckResult>& results);

}  // namespace exoc
