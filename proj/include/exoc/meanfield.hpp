#pragma once

#include "exoc/descent.hpp"
#include "exoc/variation.hpp"

#include <functional>
#include <vector>

namespace exoc {

/// Empirical measure: N points with uniform weight 1/N. Weights never
/// evolve; the continuity equation transports mass along the particle
/// characteristics.
struct ParticleEnsemble {
  std::vector<Vec> points;

  int size() const { return static_cast<int>(points.size()); }
  int dim() const { return points.empty() ? 0 : static_cast<int>(points.front().size()); }
  Vec mean() const;
};

/// Lift of an ensemble: per-particle (position, covector) pairs. For atomic
/// measures with labeled particles the barycentric projection of the lift is
/// just the per-particle covector.
struct LiftedEnsemble {
  std::vector<Vec> x;
  std::vector<Vec> y;

  int size() const { return static_cast<int>(x.size()); }
};

/// Read-only view of an ensemble handed to user callbacks. Caches first
/// moments lazily so interaction kernels of mean type stay O(1) per particle
/// within one force evaluation.
class EnsembleView {
 public:
  explicit EnsembleView(const std::vector<Vec>& pts) : pts_(&pts) {}

  int size() const { return static_cast<int>(pts_->size()); }
  const Vec& point(int i) const { return (*pts_)[static_cast<size_t>(i)]; }
  const std::vector<Vec>& points() const { return *pts_; }
  const Vec& mean() const;

 private:
  const std::vector<Vec>* pts_;
  mutable bool have_mean_ = false;
  mutable Vec mean_;
};

/// Mean-field Mayer problem over empirical measures:
/// minimize mf_cost(mu_T) subject to the nonlocal characteristics
/// dx_i/dt = F(t, x_i, mu, u).
///
/// jac_measure(t, x, mu, y, u) is the interaction-kernel derivative of F in
/// its measure argument at source point y; flat_gradient(mu, x) is the
/// x-gradient of the flat derivative of the cost. Both are analytic,
/// caller-supplied objects (validated against finite differences by
/// validate_meanfield_problem, never differenced at runtime).
///
/// kernel_apply / kernel_apply_adjoint are optional batched forms of the
/// interaction sums; when absent, a generic O(N^2) loop over jac_measure is
/// used. Structured kernels (e.g. mean interactions) should supply O(N)
/// versions.
struct MeanFieldProblem {
  int state_dim = 0;
  int control_dim = 0;

  std::function<Vec(double, const Vec&, const EnsembleView&, const Vec&)> dynamics;  // F
  std::function<Mat(double, const Vec&, const EnsembleView&, const Vec&)> jac_x;     // DF
  // kernel derivative in the measure argument, at source point y
  std::function<Mat(double, const Vec&, const EnsembleView&, const Vec&, const Vec&)> jac_measure;

  std::function<double(const EnsembleView&)> mf_cost;
  std::function<Vec(const EnsembleView&, const Vec&)> flat_gradient;

  // out[i] += (1/N) sum_j jac_measure(t, x_i, mu, x_j, u) * w[j]
  std::function<void(double, const EnsembleView&, const Vec&, const std::vector<Vec>&,
                     std::vector<Vec>&)>
      kernel_apply;
  // out[i] += (1/N) sum_j jac_measure(t, x_j, mu, x_i, u)^T * y[j]
  std::function<void(double, const EnsembleView&, const Vec&, const std::vector<Vec>&,
                     std::vector<Vec>&)>
      kernel_apply_adjoint;

  ControlSet control_set = ControlSet::box(Vec::Constant(1, -1.0), Vec::Constant(1, 1.0));
  TimeGrid horizon{0.0, 1.0, 1};
  ParticleEnsemble ensemble0;

  void check_shapes() const;
};

/// Ensemble samples on consecutive grid nodes.
struct EnsemblePath {
  TimeGrid grid;
  int first_node = 0;
  std::vector<ParticleEnsemble> ensembles;

  int last_node() const { return first_node + static_cast<int>(ensembles.size()) - 1; }
  const ParticleEnsemble& at_node(int k) const {
    return ensembles[static_cast<size_t>(k - first_node)];
  }
  const ParticleEnsemble& terminal() const { return ensembles.back(); }
};

/// RK4 on the coupled N*n particle system; the empirical measure is carried
/// exactly by the particles.
EnsemblePath particle_flow(const MeanFieldProblem& mfp, const Control& u,
                           const ParticleEnsemble& ens0, int from, int to,
                           StepCounter* counter = nullptr);

/// Backward covector characteristics along a stored forward path:
///   dy_i/dt = -DF(x_i, mu)^T y_i - (1/N) sum_j DF_kernel(x_j, mu, x_i)^T y_j,
/// from y(last) = terminal. Returns one lifted ensemble per node.
std::vector<LiftedEnsemble> lift_adjoint(const MeanFieldProblem& mfp, const Control& u,
                                         const EnsemblePath& path,
                                         const std::vector<Vec>& terminal,
                                         StepCounter* counter = nullptr);

/// Forward linearization transported by the flow:
///   dw_i/dt = DF(x_i, mu) w_i + (1/N) sum_j DF_kernel(x_i, mu, x_j) w_j.
/// Returns w on every node of the path.
std::vector<std::vector<Vec>> pushforward_tangent(const MeanFieldProblem& mfp, const Control& u,
                                                  const EnsemblePath& path,
                                                  const std::vector<Vec>& w0,
                                                  StepCounter* counter = nullptr);

/// Per-particle representative of the cost-to-go gradient of the frozen
/// reference control at (t_node, ensemble): flow the ensemble to T, seed the
/// covectors with the flat-derivative gradient of the cost, pull back.
std::vector<Vec> mf_super_adjoint_gradient(const MeanFieldProblem& mfp, const Control& u_ref,
                                           int t_node, const ParticleEnsemble& ensemble,
                                           StepCounter* counter = nullptr);

/// Exact increment identity in the mean-field problem; same structure as the
/// classical one with the ensemble inner product (1/N) sum_i y_i . v_i.
IncrementReport mf_exact_increment(const MeanFieldProblem& mfp, const Control& u_ref,
                                   const Control& u_target, StepCounter* counter = nullptr);

/// Integrated Pontryagin residual with the ensemble inner product.
PmpReport mf_pmp_residual(const MeanFieldProblem& mfp, const Control& u_ref,
                          StepCounter* counter = nullptr);

/// Sample-and-hold feedback descent on the particle system; the monotonicity
/// contract matches the classical solver.
DescentResult mf_descent(const MeanFieldProblem& mfp, const Control& u_init,
                         const DescentConfig& config);

/// Exact quadratic Wasserstein distance between two 1-D ensembles of equal
/// size (sorted pairing is the optimal coupling for uniform weights).
double wasserstein2_1d(const ParticleEnsemble& a, const ParticleEnsemble& b);

/// Finite-difference validation of flat_gradient and jac_measure (and the
/// batched kernels against the pointwise one, when supplied).
std::vector<ValidationIssue> validate_meanfield_problem(const MeanFieldProblem& mfp,
                                                        unsigned seed = 0, int probes = 4);

}  // namespace exoc
