#include "exoc/descent.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <random>

namespace exoc {

namespace {

// Single RK4 interval step with an explicit control value; mirrors the
// arithmetic of integrate_flow exactly so swept trajectories match a later
// re-integration of the assembled control bitwise.
Vec rk4_step_value(const ControlProblem& p, double t, double h, const Vec& x, const Vec& u) {
  const Vec k1 = p.dynamics(t, x, u);
  const Vec k2 = p.dynamics(t + 0.5 * h, Vec(x + 0.5 * h * k1), u);
  const Vec k3 = p.dynamics(t + 0.5 * h, Vec(x + 0.5 * h * k2), u);
  const Vec k4 = p.dynamics(t + h, Vec(x + h * k3), u);
  return Vec(x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
}

std::vector<Vec> probe_controls(const ControlProblem& p, std::mt19937_64& rng) {
  std::vector<Vec> out;
  const ControlSet& set = p.control_set;
  if (set.kind() == ControlSet::Kind::Atoms) {
    for (size_t j = 0; j < set.atom_list().size() && j < 4; ++j) out.push_back(set.atom_list()[j]);
  } else {
    out.push_back(set.lower());
    out.push_back(set.upper());
    out.push_back(set.representative());
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Vec u(set.dim());
    for (int i = 0; i < set.dim(); ++i) {
      u[i] = set.lower()[i] + unit(rng) * (set.upper()[i] - set.lower()[i]);
    }
    out.push_back(u);
  }
  return out;
}

/// Evaluates the reference cost-to-go gradient at arbitrary (node, state)
/// query points during a sweep.
class CostateOracle {
 public:
  virtual ~CostateOracle() = default;
  virtual Vec psi(int node, const Vec& x) const = 0;
};

class GenericCostateOracle final : public CostateOracle {
 public:
  GenericCostateOracle(const ControlProblem& p, const Control& ref, StepCounter* counter)
      : sa_(p, ref, counter) {}

  Vec psi(int node, const Vec& x) const override { return sa_.gradient(node, x); }

 private:
  SuperAdjoint sa_;
};

// For state-affine dynamics the per-interval RK4 step map is itself affine,
// x -> A_k x + b_k, exactly. Composing the maps backward gives the discrete
// node-to-endpoint flow x -> M_k x + c_k, and the cost-to-go gradient at any
// (node, state) is M_k^T grad_cost(M_k x + c_k) -- the exact gradient of the
// discrete cost-to-go, at O(1) per query.
class AffineCostateOracle final : public CostateOracle {
 public:
  AffineCostateOracle(const ControlProblem& p, const Control& ref, StepCounter* counter)
      : p_(&p) {
    const TimeGrid& g = ref.grid;
    const int n = g.n_steps();
    const int dim = p.state_dim;
    M_.resize(static_cast<size_t>(n + 1));
    c_.resize(static_cast<size_t>(n + 1));
    std::vector<Mat> A(static_cast<size_t>(n));
    std::vector<Vec> b(static_cast<size_t>(n));
    const double h = g.h();
    for (int k = 0; k < n; ++k) {
      const double t = g.node(k);
      const Vec& u = ref.at_interval(k);
      const Vec zero = Vec::Zero(dim);
      b[static_cast<size_t>(k)] = rk4_step_value(p, t, h, zero, u);
      Mat Ak(dim, dim);
      for (int i = 0; i < dim; ++i) {
        Vec e = Vec::Zero(dim);
        e[i] = 1.0;
        Ak.col(i) = rk4_step_value(p, t, h, e, u) - b[static_cast<size_t>(k)];
      }
      A[static_cast<size_t>(k)] = Ak;
      if (counter) counter->add(dim + 1);
    }
    M_[static_cast<size_t>(n)] = Mat::Identity(dim, dim);
    c_[static_cast<size_t>(n)] = Vec::Zero(dim);
    for (int k = n - 1; k >= 0; --k) {
      M_[static_cast<size_t>(k)] = M_[static_cast<size_t>(k + 1)] * A[static_cast<size_t>(k)];
      c_[static_cast<size_t>(k)] =
          M_[static_cast<size_t>(k + 1)] * b[static_cast<size_t>(k)] + c_[static_cast<size_t>(k + 1)];
    }
  }

  Vec psi(int node, const Vec& x) const override {
    const size_t k = static_cast<size_t>(node);
    const Vec endpoint = M_[k] * x + c_[k];
    return Vec(M_[k].transpose() * p_->cost_grad(endpoint));
  }

 private:
  const ControlProblem* p_;
  std::vector<Mat> M_;
  std::vector<Vec> c_;
};

struct SweepOutput {
  Control control;
  Trajectory trajectory;
  double predicted = 0.0;  // block-resolution quadrature of the increment integrand
  bool unchanged = false;  // every interval kept the reference value
};

SweepOutput run_sweep(const ControlProblem& p, const Control& u_ref, const CostateOracle& oracle,
                      int stride, const Trajectory* ref_traj, StepCounter* counter) {
  const TimeGrid& g = u_ref.grid;
  const int n = g.n_steps();
  const double h = g.h();
  const FieldView ref_view = FieldView::plain(u_ref);

  std::vector<Vec> values = u_ref.values;
  std::vector<Vec> nodes(static_cast<size_t>(n + 1));
  nodes[0] = p.x0;
  std::vector<int> block_starts;
  std::vector<Vec> psi_blocks;

  Vec x = p.x0;
  bool all_kept = true;
  for (int k = 0; k < n; k += stride) {
    const int block_end = std::min(k + stride, n);
    const double t = g.node(k);
    const Vec psi = oracle.psi(k, x);
    const Vec& prefer = u_ref.at_interval(k);
    const HamiltonianMin hm = minimize_hamiltonian(p, t, x, psi, &prefer);
    block_starts.push_back(k);
    psi_blocks.push_back(psi);

    bool kept = true;
    for (int j = k; j < block_end; ++j) {
      values[static_cast<size_t>(j)] = hm.argmin;
      if ((hm.argmin - u_ref.at_interval(j)).cwiseAbs().maxCoeff() != 0.0) kept = false;
    }

    if (all_kept && kept && ref_traj != nullptr) {
      // identical control so far: the integration would replay the reference
      // arithmetic; reuse its nodes instead of stepping
      for (int j = k + 1; j <= block_end; ++j) {
        nodes[static_cast<size_t>(j)] = ref_traj->at_node(j);
      }
      x = nodes[static_cast<size_t>(block_end)];
    } else {
      for (int j = k; j < block_end; ++j) {
        x = rk4_step_value(p, g.node(j), h, x, hm.argmin);
        if (!x.allFinite()) {
          throw NonFiniteState("comparison_control: non-finite state in sweep at node " +
                               std::to_string(j + 1));
        }
        nodes[static_cast<size_t>(j + 1)] = x;
        if (counter) counter->add(1);
      }
    }
    all_kept = all_kept && kept;
  }

  SweepOutput out{Control(g, std::move(values)), Trajectory{g, 0, std::move(nodes)}, 0.0,
                  all_kept};

  // Predicted decrease: trapezoid over block-start nodes (every node at
  // stride 1) of psi . (f_new - f_ref) along the new trajectory.
  block_starts.push_back(n);
  psi_blocks.push_back(oracle.psi(n, out.trajectory.at_node(n)));
  const FieldView new_view = FieldView::plain(out.control);
  double predicted = 0.0;
  for (size_t b = 0; b + 1 < block_starts.size(); ++b) {
    const int k0 = block_starts[b];
    const int k1 = block_starts[b + 1];
    const double t0 = g.node(k0);
    const double t1 = g.node(k1);
    const Vec& xa = out.trajectory.at_node(k0);
    const Vec& xb = out.trajectory.at_node(k1);
    const int interval = k0;  // the block's held control lives on [k0, k1)
    const double ga = psi_blocks[b].dot(new_view.value(p, interval, t0, xa) -
                                        ref_view.value(p, interval, t0, xa));
    const double gb = psi_blocks[b + 1].dot(new_view.value(p, k1 - 1, t1, xb) -
                                            ref_view.value(p, k1 - 1, t1, xb));
    predicted += 0.5 * (t1 - t0) * (ga + gb);
  }
  out.predicted = predicted;
  return out;
}

std::unique_ptr<CostateOracle> make_oracle(const ControlProblem& p, const Control& ref,
                                           bool affine, StepCounter* counter) {
  if (affine) return std::make_unique<AffineCostateOracle>(p, ref, counter);
  return std::make_unique<GenericCostateOracle>(p, ref, counter);
}

}  // namespace

void DescentConfig::validate() const {
  if (max_iters < 1 || cost_tol <= 0.0 || stall_iters < 1 || sample_partition < 1) {
    throw Error("DescentConfig: all fields must be positive");
  }
}

bool probe_state_affine(const ControlProblem& p) {
  std::mt19937_64 rng(0);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  const double scale = 1.0 + p.x0.norm();
  const std::vector<Vec> controls = probe_controls(p, rng);
  const double times[3] = {p.horizon.t0(), 0.5 * (p.horizon.t0() + p.horizon.T()), p.horizon.T()};

  for (int trial = 0; trial < 3; ++trial) {
    Vec x1(p.state_dim), x2(p.state_dim);
    for (int i = 0; i < p.state_dim; ++i) {
      x1[i] = p.x0[i] + scale * unit(rng);
      x2[i] = p.x0[i] + scale * unit(rng);
    }
    const Vec xm = 0.5 * (x1 + x2);
    for (const double t : times) {
      for (const Vec& u : controls) {
        const Vec f1 = p.dynamics(t, x1, u);
        const Vec f2 = p.dynamics(t, x2, u);
        const Vec fm = p.dynamics(t, xm, u);
        const double ref = 1.0 + f1.norm() + f2.norm();
        if ((fm - 0.5 * (f1 + f2)).norm() > 1e-9 * ref) return false;
        const Mat J1 = p.dynamics_jac_x(t, x1, u);
        const Mat J2 = p.dynamics_jac_x(t, x2, u);
        if ((J1 - J2).norm() > 1e-9 * (1.0 + J1.norm())) return false;
      }
    }
  }
  return true;
}

bool probe_control_affine(const ControlProblem& p) {
  if (p.control_set.kind() != ControlSet::Kind::Box) return false;
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::uniform_real_distribution<double> unit01(0.0, 1.0);
  const double scale = 1.0 + p.x0.norm();
  const double times[3] = {p.horizon.t0(), 0.5 * (p.horizon.t0() + p.horizon.T()), p.horizon.T()};

  for (int trial = 0; trial < 3; ++trial) {
    Vec x(p.state_dim);
    for (int i = 0; i < p.state_dim; ++i) x[i] = p.x0[i] + scale * unit(rng);
    Vec u1(p.control_dim), u2(p.control_dim);
    for (int i = 0; i < p.control_dim; ++i) {
      const double lo = p.control_set.lower()[i];
      const double hi = p.control_set.upper()[i];
      u1[i] = lo + unit01(rng) * (hi - lo);
      u2[i] = lo + unit01(rng) * (hi - lo);
    }
    const Vec um = 0.5 * (u1 + u2);
    for (const double t : times) {
      const Vec f1 = p.dynamics(t, x, u1);
      const Vec f2 = p.dynamics(t, x, u2);
      const Vec fm = p.dynamics(t, x, um);
      if ((fm - 0.5 * (f1 + f2)).norm() > 1e-9 * (1.0 + f1.norm() + f2.norm())) return false;
    }
  }
  return true;
}

std::pair<Control, Trajectory> comparison_control(const ControlProblem& p, const Control& u_ref,
                                                  const DescentConfig& config,
                                                  StepCounter* counter) {
  config.validate();
  p.check_shapes();
  if (!u_ref.grid.same_as(p.horizon)) {
    throw DimensionMismatch("comparison_control: control grid differs from the problem horizon");
  }
  const bool affine = config.exploit_affine_structure && probe_state_affine(p);
  const auto oracle = make_oracle(p, u_ref, affine, counter);
  SweepOutput out = run_sweep(p, u_ref, *oracle, config.sample_partition, nullptr, counter);
  return {std::move(out.control), std::move(out.trajectory)};
}

DescentResult solve(const ControlProblem& p, const Control& u_init, const DescentConfig& config) {
  config.validate();
  p.check_shapes();
  if (!u_init.grid.same_as(p.horizon)) {
    throw DimensionMismatch("solve: control grid differs from the problem horizon");
  }
  if (!admissible(p.control_set, u_init)) {
    throw Error("solve: u_init takes values outside the control set");
  }
  StepCounter counter;
  const bool affine = config.exploit_affine_structure && probe_state_affine(p);

  Control u = u_init;
  Trajectory traj = integrate_flow(p, FieldView::plain(u), p.x0, 0, p.horizon.n_steps(), &counter);
  double cost = p.cost(traj.terminal());

  DescentTrace trace;
  trace.initial_cost = cost;
  {
    DescentIteration row;
    row.iter = 0;
    row.cost = cost;
    row.resimulations = 1;
    if (config.record_residuals) row.pmp_residual = pmp_residual(p, u, nullptr).residual;
    row.steps_total = counter.steps;
    trace.iterations.push_back(row);
  }

  Control best = u;
  double best_cost = cost;
  int stall = 0;
  for (int iter = 1; iter <= config.max_iters; ++iter) {
    const auto oracle = make_oracle(p, u, affine, &counter);
    SweepOutput sweep = run_sweep(p, u, *oracle, config.sample_partition, &traj, &counter);
    const double new_cost = p.cost(sweep.trajectory.terminal());
    const double realized = cost - new_cost;

    DescentIteration row;
    row.iter = iter;
    row.predicted_decrease = -sweep.predicted;
    row.resimulations = sweep.unchanged ? 0 : 1;

    // Accept only strict descent. At the sample-and-hold floor a sweep can
    // overshoot by O(h); keeping the reference there preserves the monotone
    // contract, and the stall counter then terminates the run.
    if (realized > 0.0) {
      row.realized_decrease = realized;
      u = std::move(sweep.control);
      traj = std::move(sweep.trajectory);
      cost = new_cost;
    } else {
      row.realized_decrease = 0.0;
    }
    row.cost = cost;
    if (config.record_residuals) {
      row.pmp_residual = pmp_residual(p, u, nullptr).residual;
    }
    row.steps_total = counter.steps;
    trace.iterations.push_back(row);

    if (cost < best_cost) {
      best_cost = cost;
      best = u;
    }

    stall = (row.realized_decrease < config.cost_tol) ? stall + 1 : 0;
    if (stall >= config.stall_iters) break;
  }

  trace.total_steps = counter.steps;
  return {std::move(best), std::move(trace), best_cost};
}

DescentResult baseline_gradient_solve(const ControlProblem& p, const Control& u_init,
                                      const DescentConfig& config) {
  config.validate();
  p.check_shapes();
  if (!probe_control_affine(p)) {
    throw Error(
        "baseline_gradient_solve: requires control-affine dynamics on a box control set "
        "(the convex mixture then collapses to an ordinary control)");
  }
  if (!u_init.grid.same_as(p.horizon)) {
    throw DimensionMismatch("baseline_gradient_solve: control grid differs from the horizon");
  }
  if (!admissible(p.control_set, u_init)) {
    throw Error("baseline_gradient_solve: u_init takes values outside the control set");
  }
  constexpr double kArmijoSlope = 0.1;
  constexpr int kMaxTrials = 25;

  StepCounter counter;
  const TimeGrid& g = p.horizon;
  const int n = g.n_steps();

  Control u = u_init;
  Trajectory traj = integrate_flow(p, FieldView::plain(u), p.x0, 0, n, &counter);
  double cost = p.cost(traj.terminal());

  DescentTrace trace;
  trace.initial_cost = cost;
  {
    DescentIteration row;
    row.iter = 0;
    row.cost = cost;
    row.resimulations = 1;
    if (config.record_residuals) row.pmp_residual = pmp_residual(p, u, nullptr).residual;
    row.steps_total = counter.steps;
    trace.iterations.push_back(row);
  }

  Control best = u;
  double best_cost = cost;
  int stall = 0;
  for (int iter = 1; iter <= config.max_iters; ++iter) {
    const FieldView u_view = FieldView::plain(u);
    const Costate costate = integrate_adjoint(p, u_view, traj, &counter);

    // direction: pointwise Hamiltonian minimizer along the frozen pair
    std::vector<Vec> dir_values(static_cast<size_t>(n));
    for (int k = 0; k < n; ++k) {
      const Vec& prefer = u.at_interval(k);
      dir_values[static_cast<size_t>(k)] =
          minimize_hamiltonian(p, g.node(k), traj.at_node(k), costate.at_node(k), &prefer).argmin;
    }
    const Control dir(g, std::move(dir_values));
    const FieldView dir_view = FieldView::plain(dir);

    // first-variation slope of the full step
    double sigma = 0.0;
    for (int k = 0; k < n; ++k) {
      const auto gap = [&](int node) {
        const double t = g.node(node);
        const Vec& x = traj.at_node(node);
        return costate.at_node(node).dot(dir_view.value(p, k, t, x) - u_view.value(p, k, t, x));
      };
      sigma += 0.5 * g.h() * (gap(k) + gap(k + 1));
    }

    DescentIteration row;
    row.iter = iter;
    row.predicted_decrease = -sigma;

    bool accepted = false;
    double eps = 1.0;
    Trajectory trial_traj{g, 0, {}};
    double trial_cost = cost;
    if (sigma < -config.cost_tol) {
      for (int trial = 0; trial < kMaxTrials; ++trial) {
        const FieldView mixed = FieldView::mix(u, dir, eps);
        trial_traj = integrate_flow(p, mixed, p.x0, 0, n, &counter);
        ++row.resimulations;
        trial_cost = p.cost(trial_traj.terminal());
        if (trial_cost <= cost + kArmijoSlope * eps * sigma) {
          accepted = true;
          break;
        }
        eps *= 0.5;
      }
    }

    if (accepted) {
      for (int k = 0; k < n; ++k) {
        u.values[static_cast<size_t>(k)] =
            (1.0 - eps) * u.at_interval(k) + eps * dir.at_interval(k);
      }
      traj = std::move(trial_traj);
      row.realized_decrease = cost - trial_cost;
      cost = trial_cost;
    } else {
      row.realized_decrease = 0.0;
    }
    row.cost = cost;
    if (config.record_residuals) row.pmp_residual = pmp_residual(p, u, nullptr).residual;
    row.steps_total = counter.steps;
    trace.iterations.push_back(row);

    if (cost < best_cost) {
      best_cost = cost;
      best = u;
    }
    stall = (row.realized_decrease < config.cost_tol) ? stall + 1 : 0;
    if (stall >= config.stall_iters) break;
  }

  trace.total_steps = counter.steps;
  return {std::move(best), std::move(trace), best_cost};
}

}  // namespace exoc
