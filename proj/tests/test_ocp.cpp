#include <doctest.h>

#include <random>

#include "rompc/linalg.hpp"
#include "rompc/ocp.hpp"
#include "test_utils.hpp"

using namespace rompc;
using namespace rompc::ocp;
using geometry::Polytope;
using testutil::random_matrix;

namespace {

StateSpaceModel scalar_model(double a, double b) {
  StateSpaceModel m;
  m.A = Matrix::Constant(1, 1, a);
  m.B = Matrix::Constant(1, 1, b);
  m.Bw = Matrix(1, 0);
  m.C = Matrix::Identity(1, 1);
  m.H = Matrix::Identity(1, 1);
  m.time_domain = TimeDomain::Discrete;
  m.dt = 1.0;
  return m;
}

OcpSpec scalar_spec(double a = 0.5, double b = 1.0, int N = 5) {
  OcpSpec spec;
  spec.rom = scalar_model(a, b);
  spec.Zbar = Polytope::interval(-1.0, 1.0, "Zbar");
  spec.Ubar = Polytope::interval(-1.0, 1.0, "Ubar");
  spec.Q = Matrix::Identity(1, 1);
  spec.R = Matrix::Identity(1, 1);
  const auto ti = terminal_ingredients(spec.rom, spec.Q, spec.R, spec.Zbar, spec.Ubar,
                                       Vector::Zero(1), Vector::Zero(1));
  spec.P = ti.P;
  spec.Xf = ti.Xf;
  spec.N = N;
  spec.x_target = Vector::Zero(1);
  spec.u_target = Vector::Zero(1);
  spec.qp_tol = 1e-10;
  return spec;
}

}  // namespace

TEST_CASE("terminal set of the scalar example is a symmetric interval around 0") {
  const auto spec = scalar_spec();
  const auto box = spec.Xf.as_box();
  REQUIRE(box.has_value());
  CHECK(box->first[0] < 0.0);
  CHECK(box->second[0] > 0.0);
  CHECK(box->second[0] == doctest::Approx(-box->first[0]).epsilon(1e-9));
}

TEST_CASE("terminal set is positively invariant and admissible") {
  auto gen = testutil::rng(401);
  StateSpaceModel rom;
  rom.A = testutil::random_stable(gen, 3, 1.05);  // mildly unstable open loop
  rom.B = random_matrix(gen, 3, 1);
  rom.Bw = Matrix(3, 0);
  rom.C = random_matrix(gen, 1, 3);
  rom.H = random_matrix(gen, 1, 3);
  rom.time_domain = TimeDomain::Discrete;
  rom.dt = 1.0;
  const Polytope Zbar = Polytope::interval(-1.0, 1.0, "Zbar");
  const Polytope Ubar = Polytope::interval(-1.0, 1.0, "Ubar");
  const Matrix Q = Matrix::Identity(3, 3), R = Matrix::Identity(1, 1);
  const auto ti = terminal_ingredients(rom, Q, R, Zbar, Ubar, Vector::Zero(3), Vector::Zero(1));
  const Matrix Ak = rom.A + rom.B * ti.Kf;

  // rejection-sample points of Xf, then check one-step invariance and
  // constraint admissibility
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  int found = 0;
  while (found < 100) {
    Vector x = Vector::NullaryExpr(3, [&](Index) { return 2.0 * unif(gen); });
    if (!geometry::contains(ti.Xf, x)) continue;
    ++found;
    const Vector xn = Ak * x;
    CHECK(geometry::contains(ti.Xf, xn, 1e-9));
    CHECK(geometry::contains(Zbar, Vector(rom.H * x), 1e-9));
    CHECK(geometry::contains(Ubar, Vector(ti.Kf * x), 1e-9));
  }
}

TEST_CASE("over-tightened constraint set rejected") {
  const StateSpaceModel rom = scalar_model(0.5, 1.0);
  Polytope Zbar = Polytope::interval(-1.0, 1.0);
  Zbar.b = Vector::Constant(2, -0.1);  // empty: x <= -0.1 and -x <= -0.1
  CHECK_THROWS_WITH_AS(terminal_ingredients(rom, Matrix::Identity(1, 1), Matrix::Identity(1, 1),
                                            Zbar, Polytope::interval(-1, 1), Vector::Zero(1),
                                            Vector::Zero(1)),
                       doctest::Contains("target"), Error);
}

TEST_CASE("one-step unconstrained QP matches the closed-form minimizer") {
  auto spec = scalar_spec(0.5, 1.0, 1);
  // loosen constraints so nothing is active
  spec.Zbar = Polytope::interval(-100.0, 100.0);
  spec.Ubar = Polytope::interval(-100.0, 100.0);
  spec.Xf = Polytope::interval(-100.0, 100.0);
  const double x0 = 0.7;
  const auto sol = solve_ocp(spec, Vector::Constant(1, x0));
  REQUIRE(sol.status.status == solvers::SolveResult::Optimal);
  // min_u (x0^2) + u^2 + P (a x0 + b u)^2
  const double a = 0.5, b = 1.0, P = spec.P(0, 0);
  const double u_expected = -P * b * a * x0 / (1.0 + P * b * b);
  CHECK(sol.u0[0] == doctest::Approx(u_expected).epsilon(1e-7));
}

TEST_CASE("feasible target is a stationary point") {
  auto spec = scalar_spec(0.5, 1.0, 8);
  spec.x_target = Vector::Constant(1, 0.4);
  spec.u_target = Vector::Constant(1, 0.2);  // steady state: x = a x + b u
  // recompute the terminal set around the target
  const auto ti = terminal_ingredients(spec.rom, spec.Q, spec.R, spec.Zbar, spec.Ubar,
                                       spec.x_target, spec.u_target);
  spec.P = ti.P;
  spec.Xf = ti.Xf;
  const auto sol = solve_ocp(spec, spec.x_target);
  REQUIRE(sol.status.status == solvers::SolveResult::Optimal);
  CHECK(std::abs(sol.cost) <= 1e-8);
  CHECK(sol.u0[0] == doctest::Approx(0.2).epsilon(1e-6));
}

TEST_CASE("infeasible start reported") {
  auto spec = scalar_spec(1.2, 0.05, 3);  // weak actuator, unstable plant
  const auto sol = solve_ocp(spec, Vector::Constant(1, 0.99));
  CHECK(sol.status.status == solvers::SolveResult::Infeasible);
}

TEST_CASE("long unconstrained horizon approaches the infinite-horizon gain") {
  auto spec = scalar_spec(0.8, 1.0, 50);
  spec.Zbar = Polytope::interval(-1000.0, 1000.0);
  spec.Ubar = Polytope::interval(-1000.0, 1000.0);
  spec.Xf = Polytope::interval(-1000.0, 1000.0);
  const double x0 = 0.3;
  const auto sol = solve_ocp(spec, Vector::Constant(1, x0));
  REQUIRE(sol.status.status == solvers::SolveResult::Optimal);
  // infinite-horizon LQR action from the Riccati gain
  const Matrix X = linalg::solve_dare(spec.rom.A, spec.rom.B, spec.Q, spec.R);
  const double k = -(spec.rom.B.transpose() * X * spec.rom.B + spec.R)
                        .ldlt()
                        .solve(spec.rom.B.transpose() * X * spec.rom.A)(0, 0);
  CHECK(sol.u0[0] == doctest::Approx(k * x0).epsilon(1e-4));
}

TEST_CASE("start inside the terminal set is feasible with cost at most |x0|_P^2") {
  auto spec = scalar_spec(0.5, 1.0, 4);
  const auto box = spec.Xf.as_box();
  REQUIRE(box.has_value());
  const double x0 = 0.9 * box->second[0];
  const auto sol = solve_ocp(spec, Vector::Constant(1, x0));
  REQUIRE(sol.status.status == solvers::SolveResult::Optimal);
  CHECK(sol.cost <= spec.P(0, 0) * x0 * x0 + 1e-9);
}

TEST_CASE("recursive feasibility and cost decrease along the nominal loop") {
  auto gen = testutil::rng(409);
  StateSpaceModel rom;
  rom.A = testutil::random_stable(gen, 2, 0.95);
  rom.B = random_matrix(gen, 2, 1);
  rom.Bw = Matrix(2, 0);
  rom.C = random_matrix(gen, 1, 2);
  rom.H = random_matrix(gen, 1, 2);
  rom.time_domain = TimeDomain::Discrete;
  rom.dt = 1.0;
  OcpSpec spec;
  spec.rom = rom;
  spec.Zbar = Polytope::interval(-2.0, 2.0, "Zbar");
  spec.Ubar = Polytope::interval(-1.0, 1.0, "Ubar");
  spec.Q = Matrix::Identity(2, 2);
  spec.R = Matrix::Identity(1, 1);
  const auto ti = terminal_ingredients(rom, spec.Q, spec.R, spec.Zbar, spec.Ubar, Vector::Zero(2),
                                       Vector::Zero(1));
  spec.P = ti.P;
  spec.Xf = ti.Xf;
  spec.N = 8;
  spec.x_target = Vector::Zero(2);
  spec.u_target = Vector::Zero(1);
  spec.qp_tol = 1e-10;

  OcpSolver solver(spec);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  int starts = 0;
  while (starts < 25) {
    Vector x = Vector::NullaryExpr(2, [&](Index) { return 1.5 * unif(gen); });
    OcpSolution sol = solver.solve(x);
    if (sol.status.status != solvers::SolveResult::Optimal) continue;  // infeasible draw
    ++starts;
    double prev_cost = sol.cost;
    for (int k = 0; k < 60; ++k) {
      x = rom.A * x + rom.B * sol.u0;
      sol = solver.solve(x);
      REQUIRE(sol.status.status == solvers::SolveResult::Optimal);
      CHECK(sol.cost <= prev_cost + 1e-7 * (1.0 + std::abs(prev_cost)));
      prev_cost = sol.cost;
    }
    CHECK(x.norm() < 1e-3);  // nominal loop contracts
  }
}
