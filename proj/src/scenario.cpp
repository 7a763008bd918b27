#include "exoc/scenario.hpp"

#include <cmath>
#include <random>

namespace exoc {

namespace {

ControlSet make_set(const ScenarioConfig& cfg) {
  if (cfg.set_kind == ScenarioConfig::SetKind::Box) {
    return ControlSet::box(cfg.lower, cfg.upper);
  }
  return ControlSet::atoms(cfg.atoms);
}

void expect_dims(const ScenarioConfig& cfg, int state_dim, int control_dim, bool meanfield) {
  if (make_set(cfg).dim() != control_dim) {
    throw ConfigError("scenario '" + cfg.problem_name + "' expects control dimension " +
                      std::to_string(control_dim));
  }
  if (!meanfield) {
    if (cfg.x0.size() != state_dim) {
      throw ConfigError("scenario '" + cfg.problem_name + "' expects [initial] x0 of dimension " +
                        std::to_string(state_dim));
    }
  } else if (!cfg.has_meanfield) {
    throw ConfigError("scenario '" + cfg.problem_name + "' requires a [meanfield] section");
  }
}

void apply_injection(const ScenarioConfig& cfg, ControlProblem& p) {
  if (cfg.inject.empty()) return;
  if (cfg.inject == "grad_bug") {
    const auto grad = p.cost_grad;
    p.cost_grad = [grad](const Vec& x) {
      Vec g = grad(x);
      g[0] += 0.01 * (1.0 + std::abs(g[0]));
      return g;
    };
  } else {
    throw ConfigError("unknown fault injection '" + cfg.inject + "'");
  }
}

ParticleEnsemble sample_ensemble(const ScenarioConfig& cfg, int state_dim) {
  ParticleEnsemble ens;
  ens.points.reserve(static_cast<size_t>(cfg.particles));
  if (cfg.init_kind == ScenarioConfig::InitKind::Grid) {
    if (state_dim != 1) {
      throw ConfigError("init = grid(lo, hi) supports one-dimensional scenarios only");
    }
    for (int i = 0; i < cfg.particles; ++i) {
      const double theta =
          (cfg.particles == 1) ? 0.5
                               : static_cast<double>(i) / static_cast<double>(cfg.particles - 1);
      Vec x(1);
      x[0] = cfg.init_lo + theta * (cfg.init_hi - cfg.init_lo);
      ens.points.push_back(x);
    }
    return ens;
  }
  if (cfg.init_mean.size() != state_dim || cfg.init_std.size() != state_dim) {
    throw ConfigError("gaussian(mean, std) arguments must have the scenario's state dimension");
  }
  std::mt19937_64 rng(cfg.init_seed.value_or(cfg.seed));
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int i = 0; i < cfg.particles; ++i) {
    Vec x(state_dim);
    for (int c = 0; c < state_dim; ++c) x[c] = cfg.init_mean[c] + cfg.init_std[c] * normal(rng);
    ens.points.push_back(x);
  }
  return ens;
}

Scenario build_linear_scalar(const ScenarioConfig& cfg) {
  expect_dims(cfg, 1, 1, false);
  static constexpr double a = 0.5;
  static constexpr double target = 0.1;

  Scenario s;
  s.name = cfg.problem_name;
  s.seed = cfg.seed;
  ControlProblem& p = s.problem;
  p.state_dim = 1;
  p.control_dim = 1;
  p.dynamics = [](double, const Vec& x, const Vec& u) { return Vec(a * x + u); };
  p.dynamics_jac_x = [](double, const Vec&, const Vec&) { return Mat(Mat::Constant(1, 1, a)); };
  p.cost = [](const Vec& x) { return 0.5 * (x[0] - target) * (x[0] - target); };
  p.cost_grad = [](const Vec& x) { return Vec(Vec::Constant(1, x[0] - target)); };
  p.cost_hess = [](const Vec&) { return Mat(Mat::Identity(1, 1)); };
  p.control_set = make_set(cfg);
  p.horizon = TimeGrid(cfg.t0, cfg.T, cfg.n_steps);
  p.x0 = cfg.x0;
  return s;
}

Scenario build_bilinear(const ScenarioConfig& cfg) {
  expect_dims(cfg, 2, 1, false);
  Mat A(2, 2);
  A << -0.2, 1.0, -1.0, -0.2;
  // reachable endpoint of int u dt = s_star from x0 = (1, 0):
  // x(T) = exp(-0.2 s) (cos s, -sin s); the optimum value is exactly zero
  static constexpr double s_star = 0.9;
  Vec target(2);
  target << std::exp(-0.2 * s_star) * std::cos(s_star), -std::exp(-0.2 * s_star) * std::sin(s_star);

  Scenario s;
  s.name = cfg.problem_name;
  s.seed = cfg.seed;
  ControlProblem& p = s.problem;
  p.state_dim = 2;
  p.control_dim = 1;
  p.dynamics = [A](double, const Vec& x, const Vec& u) { return Vec(u[0] * (A * x)); };
  p.dynamics_jac_x = [A](double, const Vec&, const Vec& u) { return Mat(u[0] * A); };
  p.cost = [target](const Vec& x) { return 0.5 * (x - target).squaredNorm(); };
  p.cost_grad = [target](const Vec& x) { return Vec(x - target); };
  p.cost_hess = [](const Vec&) { return Mat(Mat::Identity(2, 2)); };
  p.control_set = make_set(cfg);
  p.horizon = TimeGrid(cfg.t0, cfg.T, cfg.n_steps);
  p.x0 = cfg.x0;
  return s;
}

Scenario build_double_integrator(const ScenarioConfig& cfg) {
  expect_dims(cfg, 2, 1, false);
  Vec target(2);
  target << 0.15, 0.1;

  Scenario s;
  s.name = cfg.problem_name;
  s.seed = cfg.seed;
  ControlProblem& p = s.problem;
  p.state_dim = 2;
  p.control_dim = 1;
  p.dynamics = [](double, const Vec& x, const Vec& u) {
    Vec f(2);
    f << x[1], u[0];
    return f;
  };
  p.dynamics_jac_x = [](double, const Vec&, const Vec&) {
    Mat J = Mat::Zero(2, 2);
    J(0, 1) = 1.0;
    return J;
  };
  p.cost = [target](const Vec& x) { return (x - target).squaredNorm(); };
  p.cost_grad = [target](const Vec& x) { return Vec(2.0 * (x - target)); };
  p.cost_hess = [](const Vec&) { return Mat(2.0 * Mat::Identity(2, 2)); };
  p.control_set = make_set(cfg);
  p.horizon = TimeGrid(cfg.t0, cfg.T, cfg.n_steps);
  p.x0 = cfg.x0;
  return s;
}

Scenario build_smooth_nonlinear(const ScenarioConfig& cfg) {
  expect_dims(cfg, 2, 1, false);
  static constexpr double mu = 0.8;
  Vec target = Vec::Zero(2);

  Scenario s;
  s.name = cfg.problem_name;
  s.seed = cfg.seed;
  ControlProblem& p = s.problem;
  p.state_dim = 2;
  p.control_dim = 1;
  p.dynamics = [](double, const Vec& x, const Vec& u) {
    Vec f(2);
    f << x[1], -x[0] + mu * (1.0 - x[0] * x[0]) * x[1] + u[0];
    return f;
  };
  p.dynamics_jac_x = [](double, const Vec& x, const Vec&) {
    Mat J(2, 2);
    J << 0.0, 1.0, -1.0 - 2.0 * mu * x[0] * x[1], mu * (1.0 - x[0] * x[0]);
    return J;
  };
  p.cost = [target](const Vec& x) { return 0.5 * (x - target).squaredNorm(); };
  p.cost_grad = [target](const Vec& x) { return Vec(x - target); };
  p.cost_hess = [](const Vec&) { return Mat(Mat::Identity(2, 2)); };
  p.control_set = make_set(cfg);
  p.horizon = TimeGrid(cfg.t0, cfg.T, cfg.n_steps);
  p.x0 = cfg.x0;
  return s;
}

Scenario build_mf_steering(const ScenarioConfig& cfg) {
  expect_dims(cfg, 1, 1, true);
  // the ensemble mean moves at speed u while deviations contract on their
  // own; a target beyond the mean's reach keeps the optimal control on the
  // boundary, so the analytic optimum splits into spread + residual distance
  static constexpr double target = 2.0;

  Scenario s;
  s.name = cfg.problem_name;
  s.seed = cfg.seed;
  s.is_meanfield = true;
  MeanFieldProblem& p = s.mf;
  p.state_dim = 1;
  p.control_dim = 1;
  p.dynamics = [](double, const Vec& x, const EnsembleView& mu, const Vec& u) {
    return Vec(u - (x - mu.mean()));
  };
  p.jac_x = [](double, const Vec&, const EnsembleView&, const Vec&) {
    return Mat(Mat::Constant(1, 1, -1.0));
  };
  p.jac_measure = [](double, const Vec&, const EnsembleView&, const Vec&, const Vec&) {
    return Mat(Mat::Identity(1, 1));
  };
  p.kernel_apply = [](double, const EnsembleView&, const Vec&, const std::vector<Vec>& w,
                      std::vector<Vec>& out) {
    Vec m = Vec::Zero(1);
    for (const Vec& wi : w) m += wi;
    m /= static_cast<double>(w.size());
    for (Vec& o : out) o = m;
  };
  p.kernel_apply_adjoint = p.kernel_apply;  // kernel is the identity matrix
  p.mf_cost = [](const EnsembleView& mu) {
    double acc = 0.0;
    for (int i = 0; i < mu.size(); ++i) {
      const double d = mu.point(i)[0] - target;
      acc += d * d;
    }
    return acc / static_cast<double>(mu.size());
  };
  p.flat_gradient = [](const EnsembleView&, const Vec& x) {
    return Vec(Vec::Constant(1, 2.0 * (x[0] - target)));
  };
  p.control_set = make_set(cfg);
  p.horizon = TimeGrid(cfg.t0, cfg.T, cfg.n_steps);
  p.ensemble0 = sample_ensemble(cfg, 1);
  return s;
}

Scenario build_mf_interaction(const ScenarioConfig& cfg) {
  expect_dims(cfg, 1, 1, true);
  static constexpr double kappa = 0.8;
  static constexpr double beta = 0.5;
  static constexpr double a = 0.3;
  static constexpr double lambda = 0.5;

  Scenario s;
  s.name = cfg.problem_name;
  s.seed = cfg.seed;
  s.is_meanfield = true;
  MeanFieldProblem& p = s.mf;
  p.state_dim = 1;
  p.control_dim = 1;
  p.dynamics = [](double, const Vec& x, const EnsembleView& mu, const Vec& u) {
    return Vec(u + Vec::Constant(1, kappa * (mu.mean()[0] - x[0]) + beta * std::tanh(x[0])));
  };
  p.jac_x = [](double, const Vec& x, const EnsembleView&, const Vec&) {
    const double th = std::tanh(x[0]);
    return Mat(Mat::Constant(1, 1, -kappa + beta * (1.0 - th * th)));
  };
  p.jac_measure = [](double, const Vec&, const EnsembleView&, const Vec&, const Vec&) {
    return Mat(Mat::Constant(1, 1, kappa));
  };
  p.kernel_apply = [](double, const EnsembleView&, const Vec&, const std::vector<Vec>& w,
                      std::vector<Vec>& out) {
    Vec m = Vec::Zero(1);
    for (const Vec& wi : w) m += wi;
    m *= kappa / static_cast<double>(w.size());
    for (Vec& o : out) o = m;
  };
  p.kernel_apply_adjoint = p.kernel_apply;
  p.mf_cost = [](const EnsembleView& mu) {
    double acc = 0.0;
    for (int i = 0; i < mu.size(); ++i) {
      const double d = mu.point(i)[0] - a;
      acc += d * d;
    }
    const double m = mu.mean()[0];
    return acc / static_cast<double>(mu.size()) + lambda * m * m;
  };
  p.flat_gradient = [](const EnsembleView& mu, const Vec& x) {
    return Vec(Vec::Constant(1, 2.0 * (x[0] - a) + 2.0 * lambda * mu.mean()[0]));
  };
  p.control_set = make_set(cfg);
  p.horizon = TimeGrid(cfg.t0, cfg.T, cfg.n_steps);
  p.ensemble0 = sample_ensemble(cfg, 1);
  return s;
}

}  // namespace

std::vector<std::string> scenario_names() {
  return {"linear_scalar", "bilinear",    "double_integrator",
          "smooth_nonlinear", "mf_steering", "mf_interaction"};
}

bool scenario_is_meanfield(const std::string& name) {
  return name == "mf_steering" || name == "mf_interaction";
}

Scenario build_scenario(const ScenarioConfig& cfg) {
  Scenario s;
  if (cfg.problem_name == "linear_scalar") {
    s = build_linear_scalar(cfg);
  } else if (cfg.problem_name == "bilinear") {
    s = build_bilinear(cfg);
  } else if (cfg.problem_name == "double_integrator") {
    s = build_double_integrator(cfg);
  } else if (cfg.problem_name == "smooth_nonlinear") {
    s = build_smooth_nonlinear(cfg);
  } else if (cfg.problem_name == "mf_steering") {
    s = build_mf_steering(cfg);
  } else if (cfg.problem_name == "mf_interaction") {
    s = build_mf_interaction(cfg);
  } else {
    throw ConfigError("unknown scenario '" + cfg.problem_name + "'");
  }
  if (!s.is_meanfield) {
    apply_injection(cfg, s.problem);
    s.problem.check_shapes();
  } else {
    if (!cfg.inject.empty()) {
      throw ConfigError("fault injection is only wired for classical scenarios");
    }
    s.mf.check_shapes();
  }
  return s;
}

Control default_initial_control(const Scenario& scenario) {
  const TimeGrid& g = scenario.is_meanfield ? scenario.mf.horizon : scenario.problem.horizon;
  const ControlSet& set =
      scenario.is_meanfield ? scenario.mf.control_set : scenario.problem.control_set;
  return Control::constant(g, set.representative());
}

}  // namespace exoc
