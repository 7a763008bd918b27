#include "exoc/meanfield.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace exoc {

namespace {

using Points = std::vector<Vec>;

void require_finite(const Points& pts, const char* who, int node) {
  for (const Vec& v : pts) {
    if (!v.allFinite()) {
      throw NonFiniteState(std::string(who) + ": non-finite particle at node " +
                           std::to_string(node));
    }
  }
}

// Forces of the whole ensemble at one time instant.
Points ensemble_forces(const MeanFieldProblem& mfp, double t, const Points& pts, const Vec& u) {
  const EnsembleView view(pts);
  const int N = view.size();
  Points out(static_cast<size_t>(N));
  for (int i = 0; i < N; ++i) {
    out[static_cast<size_t>(i)] = mfp.dynamics(t, view.point(i), view, u);
  }
  return out;
}

Points combine(const Points& x, double a, const Points& k) {
  Points out(x.size());
  for (size_t i = 0; i < x.size(); ++i) out[i] = x[i] + a * k[i];
  return out;
}

void rk4_accumulate(Points& x, double h6, const Points& k1, const Points& k2, const Points& k3,
                    const Points& k4) {
  for (size_t i = 0; i < x.size(); ++i) {
    x[i] += h6 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  }
}

// Interaction sums. out[i] = (1/N) sum_j jac_measure(t, x_i, mu, x_j)^  w[j]
// (tangent pattern) or its transpose-summation twin (adjoint pattern).
Points kernel_tangent(const MeanFieldProblem& mfp, double t, const EnsembleView& view,
                      const Vec& u, const Points& w) {
  const int N = view.size();
  Points out(static_cast<size_t>(N), Vec::Zero(mfp.state_dim));
  if (mfp.kernel_apply) {
    mfp.kernel_apply(t, view, u, w, out);
    return out;
  }
  const double inv_n = 1.0 / static_cast<double>(N);
  for (int i = 0; i < N; ++i) {
    Vec acc = Vec::Zero(mfp.state_dim);
    for (int j = 0; j < N; ++j) {
      acc += mfp.jac_measure(t, view.point(i), view, view.point(j), u) * w[static_cast<size_t>(j)];
    }
    out[static_cast<size_t>(i)] = inv_n * acc;
  }
  return out;
}

Points kernel_adjoint(const MeanFieldProblem& mfp, double t, const EnsembleView& view,
                      const Vec& u, const Points& y) {
  const int N = view.size();
  Points out(static_cast<size_t>(N), Vec::Zero(mfp.state_dim));
  if (mfp.kernel_apply_adjoint) {
    mfp.kernel_apply_adjoint(t, view, u, y, out);
    return out;
  }
  const double inv_n = 1.0 / static_cast<double>(N);
  for (int i = 0; i < N; ++i) {
    Vec acc = Vec::Zero(mfp.state_dim);
    for (int j = 0; j < N; ++j) {
      acc += mfp.jac_measure(t, view.point(j), view, view.point(i), u).transpose() *
             y[static_cast<size_t>(j)];
    }
    out[static_cast<size_t>(i)] = inv_n * acc;
  }
  return out;
}

// Stage data of one interval of a stored path: endpoint ensembles, the cubic
// Hermite midpoint ensemble and per-particle state Jacobians at all three.
struct IntervalStages {
  const Points* x0 = nullptr;
  const Points* x1 = nullptr;
  Points xmid;
  std::vector<Mat> j0, jm, j1;
};

IntervalStages make_stages(const MeanFieldProblem& mfp, const EnsemblePath& path, int k,
                           const Vec& u, bool with_jacobians) {
  const TimeGrid& g = path.grid;
  const double h = g.h();
  const double t0 = g.node(k);
  IntervalStages s;
  s.x0 = &path.at_node(k).points;
  s.x1 = &path.at_node(k + 1).points;

  const EnsembleView v0(*s.x0);
  const EnsembleView v1(*s.x1);
  const int N = v0.size();
  s.xmid.resize(static_cast<size_t>(N));
  std::vector<Vec> f0(static_cast<size_t>(N)), f1(static_cast<size_t>(N));
  for (int i = 0; i < N; ++i) {
    f0[static_cast<size_t>(i)] = mfp.dynamics(t0, v0.point(i), v0, u);
    f1[static_cast<size_t>(i)] = mfp.dynamics(t0 + h, v1.point(i), v1, u);
  }
  for (int i = 0; i < N; ++i) {
    s.xmid[static_cast<size_t>(i)] = 0.5 * ((*s.x0)[static_cast<size_t>(i)] +
                                            (*s.x1)[static_cast<size_t>(i)]) +
                                     (h / 8.0) * (f0[static_cast<size_t>(i)] -
                                                  f1[static_cast<size_t>(i)]);
  }
  if (with_jacobians) {
    const EnsembleView vm(s.xmid);
    s.j0.resize(static_cast<size_t>(N));
    s.jm.resize(static_cast<size_t>(N));
    s.j1.resize(static_cast<size_t>(N));
    for (int i = 0; i < N; ++i) {
      s.j0[static_cast<size_t>(i)] = mfp.jac_x(t0, v0.point(i), v0, u);
      s.jm[static_cast<size_t>(i)] = mfp.jac_x(t0 + 0.5 * h, vm.point(i), vm, u);
      s.j1[static_cast<size_t>(i)] = mfp.jac_x(t0 + h, v1.point(i), v1, u);
    }
  }
  return s;
}

}  // namespace

Vec ParticleEnsemble::mean() const {
  Vec m = Vec::Zero(dim());
  for (const Vec& x : points) m += x;
  return Vec(m / static_cast<double>(std::max(1, size())));
}

const Vec& EnsembleView::mean() const {
  if (!have_mean_) {
    Vec m = Vec::Zero(pts_->empty() ? 0 : static_cast<Eigen::Index>(pts_->front().size()));
    for (const Vec& x : *pts_) m += x;
    mean_ = m / static_cast<double>(std::max<size_t>(1, pts_->size()));
    have_mean_ = true;
  }
  return mean_;
}

void MeanFieldProblem::check_shapes() const {
  if (state_dim < 1 || state_dim > kMaxDim || control_dim < 1 || control_dim > kMaxDim) {
    throw DimensionMismatch("MeanFieldProblem: dimensions out of range");
  }
  if (!dynamics || !jac_x || !jac_measure || !mf_cost || !flat_gradient) {
    throw Error("MeanFieldProblem: dynamics, jac_x, jac_measure, mf_cost and flat_gradient "
                "are required");
  }
  if (ensemble0.size() < 1) {
    throw Error("MeanFieldProblem: initial ensemble is empty");
  }
  for (const Vec& x : ensemble0.points) {
    if (x.size() != state_dim || !x.allFinite()) {
      throw DimensionMismatch("MeanFieldProblem: bad initial particle");
    }
  }
}

EnsemblePath particle_flow(const MeanFieldProblem& mfp, const Control& u,
                           const ParticleEnsemble& ens0, int from, int to, StepCounter* counter) {
  const TimeGrid& g = u.grid;
  if (from > to || from < 0 || to > g.n_steps()) {
    throw Error("particle_flow: invalid node span");
  }
  const double h = g.h();
  const int N = ens0.size();

  EnsemblePath path{g, from, {}};
  path.ensembles.reserve(static_cast<size_t>(to - from + 1));
  path.ensembles.push_back(ens0);
  require_finite(ens0.points, "particle_flow", from);

  Points x = ens0.points;
  for (int k = from; k < to; ++k) {
    const double t = g.node(k);
    const Vec& uk = u.at_interval(k);
    const Points k1 = ensemble_forces(mfp, t, x, uk);
    const Points k2 = ensemble_forces(mfp, t + 0.5 * h, combine(x, 0.5 * h, k1), uk);
    const Points k3 = ensemble_forces(mfp, t + 0.5 * h, combine(x, 0.5 * h, k2), uk);
    const Points k4 = ensemble_forces(mfp, t + h, combine(x, h, k3), uk);
    rk4_accumulate(x, h / 6.0, k1, k2, k3, k4);
    require_finite(x, "particle_flow", k + 1);
    path.ensembles.push_back(ParticleEnsemble{x});
    if (counter) counter->add(N);
  }
  return path;
}

std::vector<LiftedEnsemble> lift_adjoint(const MeanFieldProblem& mfp, const Control& u,
                                         const EnsemblePath& path, const std::vector<Vec>& terminal,
                                         StepCounter* counter) {
  const TimeGrid& g = path.grid;
  const double h = g.h();
  const int lo = path.first_node;
  const int hi = path.last_node();
  const int N = path.at_node(lo).size();
  if (static_cast<int>(terminal.size()) != N) {
    throw DimensionMismatch("lift_adjoint: terminal covector count != particle count");
  }

  std::vector<LiftedEnsemble> out(static_cast<size_t>(hi - lo + 1));
  out.back() = LiftedEnsemble{path.at_node(hi).points, terminal};
  require_finite(terminal, "lift_adjoint", hi);

  Points y = terminal;
  for (int k = hi - 1; k >= lo; --k) {
    const double t = g.node(k);
    const Vec& uk = u.at_interval(k);
    const IntervalStages s = make_stages(mfp, path, k, uk, true);
    const EnsembleView v0(*s.x0), vm(s.xmid), v1(*s.x1);

    const auto rhs = [&](const std::vector<Mat>& J, const EnsembleView& view, double ts,
                         const Points& yy) -> Points {
      Points kern = kernel_adjoint(mfp, ts, view, uk, yy);
      Points r(static_cast<size_t>(N));
      for (int i = 0; i < N; ++i) {
        r[static_cast<size_t>(i)] =
            -(J[static_cast<size_t>(i)].transpose() * yy[static_cast<size_t>(i)]) -
            kern[static_cast<size_t>(i)];
      }
      return r;
    };

    // backward step from t_{k+1} to t_k
    const Points k1 = rhs(s.j1, v1, t + h, y);
    const Points k2 = rhs(s.jm, vm, t + 0.5 * h, combine(y, -0.5 * h, k1));
    const Points k3 = rhs(s.jm, vm, t + 0.5 * h, combine(y, -0.5 * h, k2));
    const Points k4 = rhs(s.j0, v0, t, combine(y, -h, k3));
    rk4_accumulate(y, -h / 6.0, k1, k2, k3, k4);
    require_finite(y, "lift_adjoint", k);
    out[static_cast<size_t>(k - lo)] = LiftedEnsemble{path.at_node(k).points, y};
    if (counter) counter->add(N);
  }
  return out;
}

std::vector<std::vector<Vec>> pushforward_tangent(const MeanFieldProblem& mfp, const Control& u,
                                                  const EnsemblePath& path,
                                                  const std::vector<Vec>& w0,
                                                  StepCounter* counter) {
  const TimeGrid& g = path.grid;
  const double h = g.h();
  const int lo = path.first_node;
  const int hi = path.last_node();
  const int N = path.at_node(lo).size();
  if (static_cast<int>(w0.size()) != N) {
    throw DimensionMismatch("pushforward_tangent: tangent count != particle count");
  }

  std::vector<std::vector<Vec>> out;
  out.reserve(static_cast<size_t>(hi - lo + 1));
  out.push_back(w0);
  Points w = w0;
  for (int k = lo; k < hi; ++k) {
    const double t = g.node(k);
    const Vec& uk = u.at_interval(k);
    const IntervalStages s = make_stages(mfp, path, k, uk, true);
    const EnsembleView v0(*s.x0), vm(s.xmid), v1(*s.x1);

    const auto rhs = [&](const std::vector<Mat>& J, const EnsembleView& view, double ts,
                         const Points& ww) -> Points {
      Points kern = kernel_tangent(mfp, ts, view, uk, ww);
      Points r(static_cast<size_t>(N));
      for (int i = 0; i < N; ++i) {
        r[static_cast<size_t>(i)] =
            J[static_cast<size_t>(i)] * ww[static_cast<size_t>(i)] + kern[static_cast<size_t>(i)];
      }
      return r;
    };

    const Points k1 = rhs(s.j0, v0, t, w);
    const Points k2 = rhs(s.jm, vm, t + 0.5 * h, combine(w, 0.5 * h, k1));
    const Points k3 = rhs(s.jm, vm, t + 0.5 * h, combine(w, 0.5 * h, k2));
    const Points k4 = rhs(s.j1, v1, t + h, combine(w, h, k3));
    rk4_accumulate(w, h / 6.0, k1, k2, k3, k4);
    require_finite(w, "pushforward_tangent", k + 1);
    out.push_back(w);
    if (counter) counter->add(N);
  }
  return out;
}

std::vector<Vec> mf_super_adjoint_gradient(const MeanFieldProblem& mfp, const Control& u_ref,
                                           int t_node, const ParticleEnsemble& ensemble,
                                           StepCounter* counter) {
  const int n = u_ref.grid.n_steps();
  const int N = ensemble.size();

  if (t_node == n) {
    const EnsembleView view(ensemble.points);
    std::vector<Vec> y(static_cast<size_t>(N));
    for (int i = 0; i < N; ++i) {
      y[static_cast<size_t>(i)] = mfp.flat_gradient(view, view.point(i));
    }
    return y;
  }

  const EnsemblePath tail = particle_flow(mfp, u_ref, ensemble, t_node, n, counter);
  const EnsembleView view_T(tail.terminal().points);
  std::vector<Vec> terminal(static_cast<size_t>(N));
  for (int i = 0; i < N; ++i) {
    terminal[static_cast<size_t>(i)] = mfp.flat_gradient(view_T, view_T.point(i));
  }
  const std::vector<LiftedEnsemble> lifts = lift_adjoint(mfp, u_ref, tail, terminal, counter);
  return lifts.front().y;
}

namespace {

double ensemble_hamiltonian(const MeanFieldProblem& mfp, double t, const EnsembleView& view,
                            const std::vector<Vec>& y, const Vec& u) {
  double acc = 0.0;
  for (int i = 0; i < view.size(); ++i) {
    acc += y[static_cast<size_t>(i)].dot(mfp.dynamics(t, view.point(i), view, u));
  }
  return acc / static_cast<double>(view.size());
}

}  // namespace

IncrementReport mf_exact_increment(const MeanFieldProblem& mfp, const Control& u_ref,
                                   const Control& u_target, StepCounter* counter) {
  if (!u_ref.grid.same_as(u_target.grid)) {
    throw DimensionMismatch("mf_exact_increment: controls live on different grids");
  }
  const TimeGrid& g = mfp.horizon;
  const int n = g.n_steps();

  const EnsemblePath target = particle_flow(mfp, u_target, mfp.ensemble0, 0, n, counter);
  const EnsemblePath ref = particle_flow(mfp, u_ref, mfp.ensemble0, 0, n, counter);

  std::vector<std::vector<Vec>> y(static_cast<size_t>(n + 1));
  for (int k = 0; k <= n; ++k) {
    y[static_cast<size_t>(k)] = mf_super_adjoint_gradient(mfp, u_ref, k, target.at_node(k),
                                                          counter);
  }

  const double h = g.h();
  double predicted = 0.0;
  for (int k = 0; k < n; ++k) {
    const auto gap = [&](int node) {
      const double t = g.node(node);
      const EnsembleView view(target.at_node(node).points);
      const std::vector<Vec>& yk = y[static_cast<size_t>(node)];
      double acc = 0.0;
      for (int i = 0; i < view.size(); ++i) {
        const Vec df = mfp.dynamics(t, view.point(i), view, u_target.at_interval(k)) -
                       mfp.dynamics(t, view.point(i), view, u_ref.at_interval(k));
        acc += yk[static_cast<size_t>(i)].dot(df);
      }
      return acc / static_cast<double>(view.size());
    };
    predicted += 0.5 * h * (gap(k) + gap(k + 1));
  }

  IncrementReport report;
  report.predicted = predicted;
  report.realized = mfp.mf_cost(EnsembleView(target.terminal().points)) -
                    mfp.mf_cost(EnsembleView(ref.terminal().points));
  report.abs_gap = std::abs(report.predicted - report.realized);
  report.grid_h = h;
  return report;
}

PmpReport mf_pmp_residual(const MeanFieldProblem& mfp, const Control& u_ref,
                          StepCounter* counter) {
  const TimeGrid& g = mfp.horizon;
  const int n = g.n_steps();
  const int N = mfp.ensemble0.size();

  const EnsemblePath path = particle_flow(mfp, u_ref, mfp.ensemble0, 0, n, counter);
  const EnsembleView view_T(path.terminal().points);
  std::vector<Vec> terminal(static_cast<size_t>(N));
  for (int i = 0; i < N; ++i) {
    terminal[static_cast<size_t>(i)] = mfp.flat_gradient(view_T, view_T.point(i));
  }
  const std::vector<LiftedEnsemble> lifts = lift_adjoint(mfp, u_ref, path, terminal, counter);

  PmpReport report;
  report.minimizer_per_node.resize(static_cast<size_t>(n + 1));
  report.h_ref.resize(static_cast<size_t>(n + 1));
  report.h_min.resize(static_cast<size_t>(n + 1));

  double worst_gap = -1.0;
  for (int k = 0; k <= n; ++k) {
    const double t = g.node(k);
    const EnsembleView view(path.at_node(k).points);
    const std::vector<Vec>& yk = lifts[static_cast<size_t>(k)].y;
    const auto objective = [&](const Vec& u) { return ensemble_hamiltonian(mfp, t, view, yk, u); };
    const HamiltonianMin hm = minimize_over_control_set(mfp.control_set, objective, nullptr);
    report.h_ref[static_cast<size_t>(k)] = objective(u_ref.at_interval(std::min(k, n - 1)));
    report.h_min[static_cast<size_t>(k)] = hm.value;
    report.minimizer_per_node[static_cast<size_t>(k)] = hm.argmin;
    const double gap = report.h_ref[static_cast<size_t>(k)] - hm.value;
    if (gap > worst_gap) {
      worst_gap = gap;
      report.worst_node = k;
    }
  }

  const double h = g.h();
  double residual = 0.0;
  for (int k = 0; k < n; ++k) {
    const auto gap_at = [&](int node) {
      const double t = g.node(node);
      const EnsembleView view(path.at_node(node).points);
      const double h_ref =
          ensemble_hamiltonian(mfp, t, view, lifts[static_cast<size_t>(node)].y,
                               u_ref.at_interval(k));
      return std::max(0.0, h_ref - report.h_min[static_cast<size_t>(node)]);
    };
    residual += 0.5 * h * (gap_at(k) + gap_at(k + 1));
  }
  report.residual = residual;
  return report;
}

DescentResult mf_descent(const MeanFieldProblem& mfp, const Control& u_init,
                         const DescentConfig& config) {
  config.validate();
  mfp.check_shapes();
  if (!u_init.grid.same_as(mfp.horizon)) {
    throw DimensionMismatch("mf_descent: control grid differs from the problem horizon");
  }
  if (!admissible(mfp.control_set, u_init)) {
    throw Error("mf_descent: u_init takes values outside the control set");
  }
  StepCounter counter;
  const TimeGrid& g = mfp.horizon;
  const int n = g.n_steps();
  const int N = mfp.ensemble0.size();
  const double h = g.h();

  const auto rollout = [&](const Control& u) {
    return particle_flow(mfp, u, mfp.ensemble0, 0, n, &counter);
  };
  const auto cost_of = [&](const EnsemblePath& path) {
    return mfp.mf_cost(EnsembleView(path.terminal().points));
  };

  Control u = u_init;
  EnsemblePath path = rollout(u);
  double cost = cost_of(path);

  DescentTrace trace;
  trace.initial_cost = cost;
  {
    DescentIteration row;
    row.iter = 0;
    row.cost = cost;
    row.resimulations = 1;
    if (config.record_residuals) row.pmp_residual = mf_pmp_residual(mfp, u, nullptr).residual;
    row.steps_total = counter.steps;
    trace.iterations.push_back(row);
  }

  Control best = u;
  double best_cost = cost;
  int stall = 0;
  const int stride = config.sample_partition;

  for (int iter = 1; iter <= config.max_iters; ++iter) {
    std::vector<Vec> values = u.values;
    std::vector<ParticleEnsemble> nodes(static_cast<size_t>(n + 1));
    nodes[0] = mfp.ensemble0;

    std::vector<int> block_starts;
    std::vector<std::vector<Vec>> psi_blocks;

    ParticleEnsemble current = mfp.ensemble0;
    for (int k = 0; k < n; k += stride) {
      const int block_end = std::min(k + stride, n);
      const double t = g.node(k);
      const std::vector<Vec> psi = mf_super_adjoint_gradient(mfp, u, k, current, &counter);
      block_starts.push_back(k);
      psi_blocks.push_back(psi);

      const EnsembleView view(current.points);
      const auto objective = [&](const Vec& w) {
        return ensemble_hamiltonian(mfp, t, view, psi, w);
      };
      const Vec& prefer = u.at_interval(k);
      const HamiltonianMin hm = minimize_over_control_set(mfp.control_set, objective, &prefer);

      for (int j = k; j < block_end; ++j) values[static_cast<size_t>(j)] = hm.argmin;

      // march the ensemble across the block under the held value
      Points x = current.points;
      for (int j = k; j < block_end; ++j) {
        const double tj = g.node(j);
        const Points k1 = ensemble_forces(mfp, tj, x, hm.argmin);
        const Points k2 = ensemble_forces(mfp, tj + 0.5 * h, combine(x, 0.5 * h, k1), hm.argmin);
        const Points k3 = ensemble_forces(mfp, tj + 0.5 * h, combine(x, 0.5 * h, k2), hm.argmin);
        const Points k4 = ensemble_forces(mfp, tj + h, combine(x, h, k3), hm.argmin);
        rk4_accumulate(x, h / 6.0, k1, k2, k3, k4);
        require_finite(x, "mf_descent", j + 1);
        nodes[static_cast<size_t>(j + 1)] = ParticleEnsemble{x};
        counter.add(N);
      }
      current = nodes[static_cast<size_t>(block_end)];
    }

    Control u_new(g, std::move(values));
    const EnsembleView terminal_view(nodes[static_cast<size_t>(n)].points);
    const double new_cost = mfp.mf_cost(terminal_view);
    const double realized = cost - new_cost;

    // block-resolution quadrature of the increment integrand
    block_starts.push_back(n);
    {
      std::vector<Vec> psi_T(static_cast<size_t>(N));
      for (int i = 0; i < N; ++i) {
        psi_T[static_cast<size_t>(i)] = mfp.flat_gradient(terminal_view, terminal_view.point(i));
      }
      psi_blocks.push_back(std::move(psi_T));
    }
    double predicted = 0.0;
    for (size_t b = 0; b + 1 < block_starts.size(); ++b) {
      const int k0 = block_starts[b];
      const int k1 = block_starts[b + 1];
      const auto gap = [&](int node, const std::vector<Vec>& psi, int interval) {
        const double t = g.node(node);
        const EnsembleView view(nodes[static_cast<size_t>(node)].points);
        double acc = 0.0;
        for (int i = 0; i < N; ++i) {
          const Vec df = mfp.dynamics(t, view.point(i), view, u_new.at_interval(interval)) -
                         mfp.dynamics(t, view.point(i), view, u.at_interval(interval));
          acc += psi[static_cast<size_t>(i)].dot(df);
        }
        return acc / static_cast<double>(N);
      };
      predicted += 0.5 * (g.node(k1) - g.node(k0)) *
                   (gap(k0, psi_blocks[b], k0) + gap(k1, psi_blocks[b + 1], k1 - 1));
    }

    DescentIteration row;
    row.iter = iter;
    row.predicted_decrease = -predicted;
    row.resimulations = 1;

    // strict-descent acceptance, as in the classical solver
    if (realized > 0.0) {
      row.realized_decrease = realized;
      u = std::move(u_new);
      path = EnsemblePath{g, 0, std::move(nodes)};
      cost = new_cost;
    } else {
      row.realized_decrease = 0.0;
    }
    row.cost = cost;
    if (config.record_residuals) {
      row.pmp_residual = mf_pmp_residual(mfp, u, nullptr).residual;
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

double wasserstein2_1d(const ParticleEnsemble& a, const ParticleEnsemble& b) {
  if (a.dim() != 1 || b.dim() != 1) {
    throw DimensionMismatch("wasserstein2_1d: ensembles must be one-dimensional");
  }
  if (a.size() != b.size() || a.size() == 0) {
    throw DimensionMismatch("wasserstein2_1d: ensembles must have equal nonzero size");
  }
  std::vector<double> xa(static_cast<size_t>(a.size())), xb(static_cast<size_t>(b.size()));
  for (int i = 0; i < a.size(); ++i) {
    xa[static_cast<size_t>(i)] = a.points[static_cast<size_t>(i)][0];
    xb[static_cast<size_t>(i)] = b.points[static_cast<size_t>(i)][0];
  }
  std::sort(xa.begin(), xa.end());
  std::sort(xb.begin(), xb.end());
  double acc = 0.0;
  for (size_t i = 0; i < xa.size(); ++i) {
    const double d = xa[i] - xb[i];
    acc += d * d;
  }
  return std::sqrt(acc / static_cast<double>(xa.size()));
}

std::vector<ValidationIssue> validate_meanfield_problem(const MeanFieldProblem& mfp, unsigned seed,
                                                        int probes) {
  std::vector<ValidationIssue> issues;
  mfp.check_shapes();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);

  const int N = mfp.ensemble0.size();
  const double t = 0.5 * (mfp.horizon.t0() + mfp.horizon.T());
  const Vec u = mfp.control_set.representative();
  const double inv_n = 1.0 / static_cast<double>(N);

  for (int q = 0; q < probes; ++q) {
    Points pts = mfp.ensemble0.points;
    for (Vec& x : pts) {
      for (int c = 0; c < mfp.state_dim; ++c) x[c] += 0.1 * unit(rng);
    }
    const EnsembleView view(pts);
    const int j = static_cast<int>(rng() % static_cast<unsigned long>(N));
    const int c = static_cast<int>(rng() % static_cast<unsigned long>(mfp.state_dim));
    const double step = 1e-6 * (1.0 + view.point(j).norm());

    // flat_gradient against finite differences of the cost under a
    // single-particle perturbation
    {
      Points plus = pts, minus = pts;
      plus[static_cast<size_t>(j)][c] += step;
      minus[static_cast<size_t>(j)][c] -= step;
      const double fd =
          (mfp.mf_cost(EnsembleView(plus)) - mfp.mf_cost(EnsembleView(minus))) / (2.0 * step);
      const double analytic = inv_n * mfp.flat_gradient(view, view.point(j))[c];
      if (std::abs(fd - analytic) > 1e-5 * (1.0 + std::abs(analytic))) {
        issues.push_back({"flat_gradient disagrees with finite differences of mf_cost (probe " +
                          std::to_string(q) + ")"});
      }
    }

    // jac_measure against finite differences of F at an off-ensemble probe
    {
      Vec x_probe = view.mean();
      x_probe[c] += 0.37 * (1.0 + x_probe.norm());
      Points plus = pts, minus = pts;
      plus[static_cast<size_t>(j)][c] += step;
      minus[static_cast<size_t>(j)][c] -= step;
      const Vec fd = (mfp.dynamics(t, x_probe, EnsembleView(plus), u) -
                      mfp.dynamics(t, x_probe, EnsembleView(minus), u)) /
                     (2.0 * step);
      const Vec analytic = inv_n * mfp.jac_measure(t, x_probe, view, view.point(j), u).col(c);
      if ((fd - analytic).norm() > 1e-5 * (1.0 + analytic.norm())) {
        issues.push_back({"jac_measure disagrees with finite differences of the field (probe " +
                          std::to_string(q) + ")"});
      }
    }

    // batched kernels against the pointwise definition
    if (mfp.kernel_apply || mfp.kernel_apply_adjoint) {
      Points w(static_cast<size_t>(N));
      for (int i = 0; i < N; ++i) {
        Vec v(mfp.state_dim);
        for (int d = 0; d < mfp.state_dim; ++d) v[d] = unit(rng);
        w[static_cast<size_t>(i)] = v;
      }
      const auto pointwise = [&](bool adjoint) {
        Points out(static_cast<size_t>(N), Vec::Zero(mfp.state_dim));
        for (int i = 0; i < N; ++i) {
          Vec acc = Vec::Zero(mfp.state_dim);
          for (int jj = 0; jj < N; ++jj) {
            if (adjoint) {
              acc += mfp.jac_measure(t, view.point(jj), view, view.point(i), u).transpose() *
                     w[static_cast<size_t>(jj)];
            } else {
              acc += mfp.jac_measure(t, view.point(i), view, view.point(jj), u) *
                     w[static_cast<size_t>(jj)];
            }
          }
          out[static_cast<size_t>(i)] = inv_n * acc;
        }
        return out;
      };
      if (mfp.kernel_apply) {
        Points batched(static_cast<size_t>(N), Vec::Zero(mfp.state_dim));
        mfp.kernel_apply(t, view, u, w, batched);
        const Points direct = pointwise(false);
        for (int i = 0; i < N; ++i) {
          if ((batched[static_cast<size_t>(i)] - direct[static_cast<size_t>(i)]).norm() > 1e-10) {
            issues.push_back({"kernel_apply disagrees with the pointwise kernel sum"});
            break;
          }
        }
      }
      if (mfp.kernel_apply_adjoint) {
        Points batched(static_cast<size_t>(N), Vec::Zero(mfp.state_dim));
        mfp.kernel_apply_adjoint(t, view, u, w, batched);
        const Points direct = pointwise(true);
        for (int i = 0; i < N; ++i) {
          if ((batched[static_cast<size_t>(i)] - direct[static_cast<size_t>(i)]).norm() > 1e-10) {
            issues.push_back({"kernel_apply_adjoint disagrees with the pointwise kernel sum"});
            break;
          }
        }
      }
    }
  }
  return issues;
}

}  // namespace exoc
