#include "exoc/variation.hpp"

#include "exoc/checks.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <cmath>

using namespace exoc;

TEST_CASE("hamiltonian values") {
  ControlProblem p = test::make_integrator();

  SUBCASE("zero covector") {
    CHECK(hamiltonian(p, 0.0, Vec::Zero(1), Vec::Zero(1), Vec::Constant(1, 0.7)) == 0.0);
  }

  SUBCASE("dot product") {
    CHECK(hamiltonian(p, 0.0, Vec::Zero(1), Vec::Constant(1, 3.0), Vec::Constant(1, 2.0)) == 6.0);
  }

  SUBCASE("relaxed weights average the field") {
    const std::vector<Vec> atoms = {Vec::Constant(1, -1.0), Vec::Constant(1, 1.0)};
    Eigen::VectorXd w(2);
    w << 0.5, 0.5;
    CHECK(hamiltonian(p, 0.0, Vec::Zero(1), Vec::Ones(1), atoms, w) == doctest::Approx(0.0));
  }

  SUBCASE("dimension mismatch") {
    CHECK_THROWS_AS(hamiltonian(p, 0.0, Vec::Zero(1), Vec::Zero(2), Vec::Zero(1)),
                    DimensionMismatch);
  }
}

TEST_CASE("hamiltonian minimization") {
  SUBCASE("affine box reduces to the switching sign") {
    ControlProblem p = test::make_integrator();
    const auto hm = minimize_hamiltonian(p, 0.0, Vec::Zero(1), Vec::Constant(1, 2.0));
    CHECK(hm.argmin[0] == -1.0);
    CHECK(hm.value == doctest::Approx(-2.0));
  }

  SUBCASE("tie keeps the preferred value") {
    ControlProblem p = test::make_integrator();
    const Vec prefer = Vec::Constant(1, 0.37);
    const auto hm = minimize_hamiltonian(p, 0.0, Vec::Zero(1), Vec::Zero(1), &prefer);
    CHECK(hm.argmin[0] == 0.37);
    CHECK(hm.value == doctest::Approx(0.0));
  }

  SUBCASE("atom sets are enumerated") {
    ControlProblem p = test::make_integrator();
    p.control_set = ControlSet::atoms(
        {Vec::Constant(1, -1.0), Vec::Constant(1, 0.0), Vec::Constant(1, 2.0)});
    const auto hm = minimize_hamiltonian(p, 0.0, Vec::Zero(1), Vec::Constant(1, 3.0));
    CHECK(hm.argmin[0] == -1.0);
    CHECK(hm.value == doctest::Approx(-3.0));
  }

  SUBCASE("non-affine Hamiltonian falls back to the grid search") {
    ControlProblem p = test::make_integrator();
    p.dynamics = [](double, const Vec&, const Vec& u) {
      return Vec(Vec::Constant(1, (u[0] - 0.3) * (u[0] - 0.3)));
    };
    const auto hm = minimize_hamiltonian(p, 0.0, Vec::Zero(1), Vec::Ones(1));
    CHECK(std::abs(hm.argmin[0] - 0.3) < 1e-4);
    CHECK(hm.value < 1e-7);
  }

  SUBCASE("multilinear cross terms are caught by the diagonal probe") {
    ControlProblem p = test::make_integrator();
    p.control_dim = 2;
    p.control_set = ControlSet::box(Vec::Constant(2, -1.0), Vec::Constant(2, 1.0));
    p.dynamics = [](double, const Vec&, const Vec& u) {
      return Vec(Vec::Constant(1, u[0] * u[1]));
    };
    const auto hm = minimize_hamiltonian(p, 0.0, Vec::Zero(1), Vec::Ones(1));
    CHECK(hm.value == doctest::Approx(-1.0));  // minimum of u1 u2 on the square
  }
}

TEST_CASE("exact increment identity") {
  SUBCASE("equal controls give exactly zero") {
    ControlProblem p = test::make_vdp(1.0, 100);
    std::mt19937_64 rng(41);
    const Control u = test::random_control(p, rng);
    const IncrementReport r = exact_increment(p, u, u);
    CHECK(r.predicted == 0.0);
    CHECK(r.realized == 0.0);
  }

  SUBCASE("linear problem: both sides equal T") {
    ControlProblem p = test::make_integrator(1.0, 50);
    const Control u_ref = Control::constant(p.horizon, Vec::Zero(1));
    const Control u_target = Control::constant(p.horizon, Vec::Ones(1));
    const IncrementReport r = exact_increment(p, u_ref, u_target);
    CHECK(r.predicted == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(r.realized == doctest::Approx(1.0).epsilon(1e-12));
  }

  SUBCASE("closed form on the scalar affine problem") {
    // dx = (a x + u) dt, cost 0.5 (x - target)^2, reference 0, target value c:
    //   flow of the reference:        F(t, x) = e^{a(T-t)} x
    //   cost-to-go gradient:          g(t, x) = e^{a(T-t)} (e^{a(T-t)} x - target)
    //   perturbed state:              x(t) = e^{a t} x0 + c (e^{a t} - 1) / a
    // so both sides of the identity integrate in closed form
    const double a = 0.6, target = 0.1, c = 0.7, T = 1.0, x0 = 0.8;
    ControlProblem p = test::make_scalar_affine(a, target, T, 2000);
    const Control u_ref = Control::constant(p.horizon, Vec::Zero(1));
    const Control u_target = Control::constant(p.horizon, Vec::Constant(1, c));
    const IncrementReport r = exact_increment(p, u_ref, u_target);

    const auto x_of = [&](double t) { return std::exp(a * t) * x0 + c * (std::exp(a * t) - 1.0) / a; };
    const double xT = x_of(T);
    const double realized =
        0.5 * (xT - target) * (xT - target) -
        0.5 * (std::exp(a * T) * x0 - target) * (std::exp(a * T) * x0 - target);
    // integrand: e^{a(T-t)} (e^{a(T-t)} x(t) - target) c; integrate analytically
    //   e^{2a(T-t)} x(t) = e^{2aT - at} x0 + (c/a)(e^{2aT - at} - e^{2a(T-t)})
    const double e2aT = std::exp(2.0 * a * T);
    const double i1 = (x0 + c / a) * e2aT * (1.0 - std::exp(-a * T)) / a;   // int e^{2aT-at}
    const double i2 = -(c / a) * e2aT * (1.0 - std::exp(-2.0 * a * T)) / (2.0 * a);
    const double i3 = -target * (std::exp(a * T) - 1.0) / a;               // int e^{a(T-t)}
    const double predicted = c * (i1 + i2 + i3);

    CHECK(std::abs(r.realized - realized) < 1e-9);
    CHECK(std::abs(r.predicted - predicted) < 1e-6);
    CHECK(std::abs(realized - predicted) < 1e-12);  // the identity itself, in closed form
  }

  SUBCASE("smooth scenario: gap below 1e-6 and shrinking under refinement") {
    const auto gap_at = [](int n) {
      ControlProblem p = test::make_vdp(1.5, n);
      std::mt19937_64 rng(43);
      const Control a = test::random_control(p, rng);
      const Control b = test::random_control(p, rng);
      return exact_increment(p, a, b).abs_gap;
    };
    const double g1000 = gap_at(1000);
    const double g2000 = gap_at(2000);
    CHECK(g1000 <= 1e-6);
    CHECK(g1000 / g2000 >= 3.0);
  }

  SUBCASE("antisymmetry up to quadrature error") {
    ControlProblem p = test::make_vdp(1.0, 500);
    std::mt19937_64 rng(47);
    const Control a = test::random_control(p, rng);
    const Control b = test::random_control(p, rng);
    const IncrementReport ab = exact_increment(p, a, b);
    const IncrementReport ba = exact_increment(p, b, a);
    CHECK(std::abs(ab.predicted + ba.predicted) <= 2.0 * (ab.abs_gap + ba.abs_gap) + 1e-12);
  }

  SUBCASE("control-affine problems: identity holds at every mixing weight") {
    ControlProblem p = test::make_scalar_affine(0.5, 0.1, 1.0, 400);
    std::mt19937_64 rng(53);
    const Control a = test::random_control(p, rng);
    const Control b = test::random_control(p, rng);
    for (const double eps : {0.25, 0.5, 1.0}) {
      const IncrementReport r =
          exact_increment(p, FieldView::plain(a), FieldView::mix(a, b, eps));
      CHECK(r.abs_gap <= 5e-6);
    }
  }
}

TEST_CASE("first variation") {
  SUBCASE("vanishes on the diagonal") {
    ControlProblem p = test::make_vdp(1.0, 100);
    const Control u = Control::constant(p.horizon, Vec::Constant(1, 0.3));
    CHECK(first_variation(p, u, u) == 0.0);
  }

  SUBCASE("matches the resimulated directional derivative") {
    ControlProblem p = test::make_vdp(1.0, 500);
    std::mt19937_64 rng(59);
    const Control a = test::random_control(p, rng);
    const Control b = test::random_control(p, rng);
    const double v1 = first_variation(p, a, b);
    const double eps = 1e-4;
    const double j0 = total_cost(p, a);
    const double je = total_cost(p, FieldView::mix(a, b, eps));
    CHECK(std::abs((je - j0) / eps - v1) <= 1e-3 * std::max(1.0, std::abs(v1)));
  }

  SUBCASE("on the linear problem it equals the exact increment") {
    ControlProblem p = test::make_integrator(1.0, 200);
    std::mt19937_64 rng(61);
    const Control a = test::random_control(p, rng);
    const Control b = test::random_control(p, rng);
    const double v1 = first_variation(p, a, b);
    const IncrementReport r = exact_increment(p, a, b);
    CHECK(std::abs(v1 - r.realized) < 1e-10);
  }
}

TEST_CASE("second variation") {
  SUBCASE("vanishes on the diagonal") {
    ControlProblem p = test::make_vdp(1.0, 100);
    const Control u = Control::constant(p.horizon, Vec::Constant(1, 0.3));
    CHECK(second_variation(p, u, u) == 0.0);
  }

  SUBCASE("Taylor remainder decays at third order") {
    // a wide constant pair keeps the third-order coefficient well above the
    // quadrature bias of the variation terms
    ControlProblem p = test::make_vdp(1.5, 2000);
    const Control a = Control::constant(p.horizon, Vec::Constant(1, -0.9));
    const Control b = Control::constant(p.horizon, Vec::Constant(1, 0.9));
    const double j0 = total_cost(p, a);
    const double v1 = first_variation(p, a, b);
    const double v2 = second_variation(p, a, b);
    std::vector<double> eps_list, rem;
    for (int j = 0; j <= 8; ++j) {
      const double eps = std::pow(10.0, -1.0 - 0.25 * j);
      const double je = total_cost(p, FieldView::mix(a, b, eps));
      rem.push_back(std::abs(je - j0 - eps * v1 - eps * eps * v2));
      eps_list.push_back(eps);
    }
    CHECK(log_log_slope(eps_list, rem) >= 2.7);
  }

  SUBCASE("matches half the second difference on an LQ problem") {
    ControlProblem p = test::make_scalar_affine(0.5, 0.1, 1.0, 1000);
    std::mt19937_64 rng(71);
    const Control a = test::random_control(p, rng);
    const Control b = test::random_control(p, rng);
    const double v2 = second_variation(p, a, b);
    const double eps = 1e-3;
    const double j0 = total_cost(p, a);
    const double jp = total_cost(p, FieldView::mix(a, b, eps));
    // LQ cost is quadratic in eps: the full step minus the linear part
    const double v1 = first_variation(p, a, b);
    const double fd = (jp - j0 - eps * v1) / (eps * eps);
    CHECK(std::abs(fd - v2) <= 1e-3 * std::max(1.0, std::abs(v2)));
  }
}

TEST_CASE("pontryagin residual") {
  SUBCASE("vanishing terminal gradient makes the residual zero") {
    ControlProblem p = test::make_vdp(1.0, 100);
    p.cost_grad = [](const Vec&) { return Vec(Vec::Zero(2)); };
    const Control u = Control::constant(p.horizon, Vec::Constant(1, 0.2));
    CHECK(pmp_residual(p, u).residual == 0.0);
  }

  SUBCASE("analytic extremal of the double integrator") {
    // unreachable target far up the x1 axis: pushing with u = +1 throughout
    // is the unique extremal (and the optimum)
    ControlProblem p;
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
    Vec target(2);
    target << 10.0, 3.0;
    p.cost = [target](const Vec& x) { return (x - target).squaredNorm(); };
    p.cost_grad = [target](const Vec& x) { return Vec(2.0 * (x - target)); };
    p.cost_hess = [](const Vec&) { return Mat(2.0 * Mat::Identity(2, 2)); };
    p.control_set = ControlSet::box(Vec::Constant(1, -1.0), Vec::Constant(1, 1.0));
    p.horizon = TimeGrid(0.0, 1.2, 400);
    p.x0 = Vec::Zero(2);

    const Control extremal = Control::constant(p.horizon, Vec::Ones(1));
    const PmpReport r = pmp_residual(p, extremal);
    CHECK(r.residual <= 1e-8);

    // first-order nonnegativity at the extremal
    std::mt19937_64 rng(73);
    for (int trial = 0; trial < 5; ++trial) {
      const Control u = test::random_control(p, rng);
      CHECK(first_variation(p, extremal, u) >= -1e-8);
    }
  }

  SUBCASE("integrated gap of the idle control on the linear problem") {
    ControlProblem p = test::make_integrator(1.0, 250);
    const Control u = Control::constant(p.horizon, Vec::Zero(1));
    const PmpReport r = pmp_residual(p, u);
    // H_ref = 0, min over [-1, 1] is -1, so the gap integrates to T
    CHECK(r.residual == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(r.minimizer_per_node.front()[0] == -1.0);
  }
}
