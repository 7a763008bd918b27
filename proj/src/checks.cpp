#include "exoc/checks.hpp"

#include "exoc/report.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace exoc {

namespace {

Vec random_in_set(const ControlSet& set, std::mt19937_64& rng) {
  if (set.kind() == ControlSet::Kind::Atoms) {
    std::uniform_int_distribution<size_t> pick(0, set.atom_list().size() - 1);
    return set.atom_list()[pick(rng)];
  }
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Vec u(set.dim());
  for (int i = 0; i < set.dim(); ++i) {
    u[i] = set.lower()[i] + unit(rng) * (set.upper()[i] - set.lower()[i]);
  }
  return u;
}

Control random_control(const TimeGrid& g, const ControlSet& set, std::mt19937_64& rng) {
  std::vector<Vec> values(static_cast<size_t>(g.n_steps()));
  for (Vec& v : values) v = random_in_set(set, rng);
  return Control(g, std::move(values));
}

void classical_checks(const Scenario& scenario, std::vector<CheckResult>& out) {
  const ControlProblem& p = scenario.problem;
  const TimeGrid& g = p.horizon;
  const int n = g.n_steps();
  std::mt19937_64 rng(scenario.seed);

  // cost_grad (and cost_hess) against finite differences
  {
    const auto issues = validate_problem(p, scenario.seed);
    CheckResult r{"gradient_validation", issues.empty(), static_cast<double>(issues.size()), 0.0,
                  issues.empty() ? "" : issues.front().what};
    out.push_back(r);
  }

  // exact increment identity on random control pairs; quadrature-limited,
  // bound scaled from 1e-6 at n = 1000
  {
    const double tol = 1e-6 * std::pow(1000.0 / n, 2.0) * std::max(1.0, (g.T() - g.t0()));
    double worst = 0.0;
    for (int trial = 0; trial < 3; ++trial) {
      const Control a = random_control(g, p.control_set, rng);
      const Control b = random_control(g, p.control_set, rng);
      worst = std::max(worst, exact_increment(p, a, b).abs_gap);
    }
    out.push_back({"increment_exactness", worst <= tol, worst, tol, "3 random control pairs"});
  }

  const Control u_ref = random_control(g, p.control_set, rng);
  const Trajectory traj = integrate_flow(p, u_ref, p.x0, 0, n);
  const SuperAdjoint sa(p, u_ref);

  // cost-to-go constant along its own flow
  {
    double mean = 0.0;
    std::vector<double> vals(static_cast<size_t>(n + 1));
    for (int k = 0; k <= n; ++k) {
      vals[static_cast<size_t>(k)] = sa.value(k, traj.at_node(k));
      mean += vals[static_cast<size_t>(k)];
    }
    mean /= static_cast<double>(n + 1);
    double var = 0.0;
    for (const double v : vals) var += (v - mean) * (v - mean);
    const double stddev = std::sqrt(var / static_cast<double>(n + 1));
    const double tol = 1e-9 * std::max(1.0, std::abs(mean));
    out.push_back({"duality_constancy", stddev <= tol, stddev, tol, ""});
  }

  // gradient along the reference trajectory equals the classical costate
  {
    const Costate costate = integrate_adjoint(p, FieldView::plain(u_ref), traj);
    double worst = 0.0;
    for (int k = 0; k <= n; ++k) {
      worst = std::max(worst, (sa.gradient(k, traj.at_node(k)) - costate.at_node(k))
                                  .cwiseAbs()
                                  .maxCoeff());
    }
    out.push_back({"gradient_adjoint_coincidence", worst <= 1e-8, worst, 1e-8, ""});
  }

  // negated Riccati matrix against the finite-difference cost-to-go Hessian
  if (p.has_cost_hess()) {
    const Costate costate = integrate_adjoint(p, FieldView::plain(u_ref), traj);
    const RiccatiPath riccati = integrate_riccati(p, FieldView::plain(u_ref), traj, costate);
    double worst = 0.0;
    for (int s = 0; s < 5; ++s) {
      const int k = (s * n) / 5;
      const Mat fd = sa.hessian_fd(k, traj.at_node(k));
      const Mat neg_p = -riccati.at_node(k);
      worst = std::max(worst, (fd - neg_p).norm() / std::max(1.0, fd.norm()));
    }
    out.push_back({"riccati_hessian", worst <= 1e-3, worst, 1e-3, "5 sampled nodes"});
  }

  // Taylor remainder slope over eps in [1e-3, 1e-1]. A wide constant pair
  // keeps the third-order coefficient above the quadrature bias of the
  // variation terms; random pairs can make it vanish.
  if (p.has_cost_hess()) {
    Vec u_lo, u_hi;
    if (p.control_set.kind() == ControlSet::Kind::Box) {
      const Vec mid = p.control_set.representative();
      u_lo = mid + 0.9 * (p.control_set.lower() - mid);
      u_hi = mid + 0.9 * (p.control_set.upper() - mid);
    } else {
      u_lo = p.control_set.atom_list().front();
      u_hi = p.control_set.atom_list().back();
    }
    const Control taylor_ref = Control::constant(g, u_lo);
    const Control u_target = Control::constant(g, u_hi);
    const Control& u_base = taylor_ref;
    const double j_ref = total_cost(p, u_base);
    const double v1 = first_variation(p, u_base, u_target);
    const double v2 = second_variation(p, u_base, u_target);
    std::vector<double> eps_list, remainders;
    double defect = 0.0;  // remainder normalized by eps^2
    for (int j = 0; j <= 8; ++j) {
      const double eps = std::pow(10.0, -1.0 - 0.25 * j);
      const double j_eps = total_cost(p, FieldView::mix(u_base, u_target, eps));
      const double rem = std::abs(j_eps - j_ref - eps * v1 - eps * eps * v2);
      defect = std::max(defect, rem / (eps * eps));
      if (rem > 0.0) {
        eps_list.push_back(eps);
        remainders.push_back(rem);
      }
    }
    const double slope = (eps_list.size() >= 3) ? log_log_slope(eps_list, remainders) : 3.0;
    // problems without third-order structure (exactly quadratic cost maps)
    // leave only O(h^2) quadrature noise in the remainder; accept those
    // through the normalized defect instead of the slope
    const double h = g.h();
    const bool at_floor = defect <= 25.0 * h * h * (1.0 + std::abs(v1) + std::abs(v2));
    out.push_back({"taylor_regression", slope >= 2.7 || at_floor, slope, 2.7,
                   at_floor ? "remainder at the quadrature floor (no cubic term)"
                            : "slope of log remainder vs log eps (larger is better)"});
  }
}

void meanfield_checks(const Scenario& scenario, std::vector<CheckResult>& out) {
  const MeanFieldProblem& p = scenario.mf;
  const TimeGrid& g = p.horizon;
  const int n = g.n_steps();
  const int N = p.ensemble0.size();
  std::mt19937_64 rng(scenario.seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);

  {
    const auto issues = validate_meanfield_problem(p, scenario.seed);
    out.push_back({"mf_validation", issues.empty(), static_cast<double>(issues.size()), 0.0,
                   issues.empty() ? "" : issues.front().what});
  }

  const Control u_ref = random_control(g, p.control_set, rng);
  const EnsemblePath path = particle_flow(p, u_ref, p.ensemble0, 0, n);

  // <p_t, v_t> constant under the dual transports
  {
    double worst = 0.0;
    for (int trial = 0; trial < 3; ++trial) {
      std::vector<Vec> w0(static_cast<size_t>(N)), yT(static_cast<size_t>(N));
      for (int i = 0; i < N; ++i) {
        Vec a(p.state_dim), b(p.state_dim);
        for (int c = 0; c < p.state_dim; ++c) {
          a[c] = unit(rng);
          b[c] = unit(rng);
        }
        w0[static_cast<size_t>(i)] = a;
        yT[static_cast<size_t>(i)] = b;
      }
      const auto w = pushforward_tangent(p, u_ref, path, w0);
      const auto y = lift_adjoint(p, u_ref, path, yT);
      double lo = 0.0, hi = 0.0;
      for (int k = 0; k <= n; ++k) {
        double pair = 0.0;
        for (int i = 0; i < N; ++i) {
          pair += y[static_cast<size_t>(k)].y[static_cast<size_t>(i)].dot(
              w[static_cast<size_t>(k)][static_cast<size_t>(i)]);
        }
        pair /= static_cast<double>(N);
        if (k == 0) {
          lo = hi = pair;
        } else {
          lo = std::min(lo, pair);
          hi = std::max(hi, pair);
        }
      }
      worst = std::max(worst, hi - lo);
    }
    out.push_back({"pairing_conservation", worst <= 1e-7, worst, 1e-7, "3 random pairs"});
  }

  // mean-field exact increment; bound scaled from 1e-5 at n = 500
  {
    const Control u_target = random_control(g, p.control_set, rng);
    const double tol = 1e-5 * std::pow(500.0 / n, 2.0) * std::max(1.0, g.T() - g.t0());
    const IncrementReport report = mf_exact_increment(p, u_ref, u_target);
    out.push_back({"mf_increment_exactness", report.abs_gap <= tol, report.abs_gap, tol, ""});
  }

  // cost-to-go constant along the reference ensemble path
  {
    double lo = 0.0, hi = 0.0;
    const int stride = std::max(1, n / 50);
    bool first = true;
    for (int k = 0; k <= n; k += stride) {
      const EnsemblePath tail = particle_flow(p, u_ref, path.at_node(k), k, n);
      const double v = p.mf_cost(EnsembleView(tail.terminal().points));
      if (first) {
        lo = hi = v;
        first = false;
      } else {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    }
    const double drift = hi - lo;
    const double tol = 1e-8 * std::max(1.0, std::abs(hi));
    out.push_back({"mf_duality_constancy", drift <= tol, drift, tol, ""});
  }
}

}  // namespace

double log_log_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const size_t m = x.size();
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (size_t i = 0; i < m; ++i) {
    const double lx = std::log(x[i]);
    const double ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double denom = m * sxx - sx * sx;
  return (m * sxy - sx * sy) / denom;
}

std::vector<CheckResult> run_checks(const Scenario& scenario) {
  std::vector<CheckResult> out;
  if (scenario.is_meanfield) {
    meanfield_checks(scenario, out);
  } else {
    classical_checks(scenario, out);
  }
  return out;
}

std::string checks_to_table(const std::vector<CheckResult>& results) {
  std::string out;
  for (const CheckResult& r : results) {
    out += r.passed ? "PASS  " : "FAIL  ";
    out += r.name;
    out += "  measured=" + format_number(r.measured);
    out += "  bound=" + format_number(r.threshold);
    if (!r.note.empty()) out += "  (" + r.note + ")";
    out += '\n';
  }
  return out;
}

std::string checks_to_json(const std::vector<CheckResult>& results) {
  std::string out = "[";
  for (size_t i = 0; i < results.size(); ++i) {
    if (i > 0) out += ',';
    out += "{\"name\":\"" + results[i].name + "\",\"passed\":";
    out += results[i].passed ? "true" : "false";
    out += ",\"measured\":" + format_number(results[i].measured);
    out += ",\"bound\":" + format_number(results[i].threshold) + "}";
  }
  out += "]\n";
  return out;
}

}  // namespace exoc
