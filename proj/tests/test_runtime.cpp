#include <doctest.h>

#include "rompc/heat_benchmark.hpp"
#include "rompc/pipeline.hpp"
#include "rompc/runtime.hpp"
#include "test_utils.hpp"

using namespace rompc;
using namespace rompc::runtime;
using geometry::Polytope;
using testutil::random_matrix;

namespace {

StateSpaceModel scalar_model(double a, double b, double c = 1.0, double h = 1.0,
                             TimeDomain td = TimeDomain::Discrete) {
  StateSpaceModel m;
  m.A = Matrix::Constant(1, 1, a);
  m.B = Matrix::Constant(1, 1, b);
  m.Bw = Matrix(1, 0);
  m.C = Matrix::Constant(1, 1, c);
  m.H = Matrix::Constant(1, 1, h);
  m.time_domain = td;
  m.dt = (td == TimeDomain::Discrete) ? 1.0 : 0.0;
  return m;
}

// minimal scalar design with analytic ingredients
RompcDesign scalar_design(double a = 0.5, double b = 1.0, double k = -0.3, double l = 0.4) {
  RompcDesign d;
  d.rom = scalar_model(a, b);
  d.V_basis = Matrix::Identity(1, 1);
  d.W_basis = Matrix::Identity(1, 1);
  d.K = Matrix::Constant(1, 1, k);
  d.L = Matrix::Constant(1, 1, l);
  d.Q = Matrix::Identity(1, 1);
  d.R = Matrix::Identity(1, 1);
  const auto ti = ocp::terminal_ingredients(d.rom, d.Q, d.R, Polytope::interval(-1, 1, "Zbar"),
                                            Polytope::interval(-1, 1, "Ubar"), Vector::Zero(1),
                                            Vector::Zero(1));
  d.P = ti.P;
  d.Kf = ti.Kf;
  d.Xf = ti.Xf;
  d.Zbar = Polytope::interval(-1, 1, "Zbar");
  d.Ubar = Polytope::interval(-1, 1, "Ubar");
  d.delta_z = Vector::Zero(2);
  d.delta_u = Vector::Zero(2);
  d.N = 5;
  d.dt = 1.0;
  d.time_domain = TimeDomain::Discrete;
  d.rho_Aeps = 0.9;
  d.qp_tol = 1e-10;
  return d;
}

}  // namespace

TEST_CASE("zoh_discretize") {
  SUBCASE("zero dynamics integrate to dt B") {
    StateSpaceModel ct = scalar_model(0.0, 2.0, 1.0, 1.0, TimeDomain::Continuous);
    const StateSpaceModel d = zoh_discretize(ct, 0.25);
    CHECK(d.A(0, 0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(d.B(0, 0) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(d.dt == 0.25);
  }
  SUBCASE("scalar closed form") {
    const double a = -1.3, b = 0.7, dt = 0.37;
    StateSpaceModel ct = scalar_model(a, b, 1.0, 1.0, TimeDomain::Continuous);
    const StateSpaceModel d = zoh_discretize(ct, dt);
    CHECK(d.A(0, 0) == doctest::Approx(std::exp(a * dt)).epsilon(1e-12));
    CHECK(d.B(0, 0) == doctest::Approx((std::exp(a * dt) - 1.0) / a * b).epsilon(1e-12));
  }
  SUBCASE("held-input discrete simulation matches a fine RK4 integration") {
    auto gen = testutil::rng(501);
    StateSpaceModel ct;
    ct.A = testutil::random_hurwitz(gen, 3, 0.1);
    ct.B = random_matrix(gen, 3, 2);
    ct.Bw = Matrix(3, 0);
    ct.C = random_matrix(gen, 1, 3);
    ct.H = random_matrix(gen, 1, 3);
    ct.time_domain = TimeDomain::Continuous;
    const double dt = 0.2;
    const StateSpaceModel d = zoh_discretize(ct, dt);

    Vector x = random_matrix(gen, 3, 1);
    Vector x_rk = x;
    for (int step = 0; step < 10; ++step) {
      const Vector u = random_matrix(gen, 2, 1);
      // RK4 with a fine substep as the independent integration oracle
      const int sub = 2000;
      const double hh = dt / sub;
      auto f = [&](const Vector& s) { return Vector(ct.A * s + ct.B * u); };
      for (int i = 0; i < sub; ++i) {
        const Vector k1 = f(x_rk);
        const Vector k2 = f(x_rk + 0.5 * hh * k1);
        const Vector k3 = f(x_rk + 0.5 * hh * k2);
        const Vector k4 = f(x_rk + hh * k3);
        x_rk += hh / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      }
      x = d.A * x + d.B * u;
      CHECK((x - x_rk).norm() <= 1e-8 * (1.0 + x_rk.norm()));
    }
  }
  SUBCASE("nonpositive dt rejected") {
    StateSpaceModel ct = scalar_model(0.0, 1.0, 1.0, 1.0, TimeDomain::Continuous);
    CHECK_THROWS_AS(zoh_discretize(ct, 0.0), Error);
  }
}

TEST_CASE("setpoint targets") {
  SUBCASE("zero reference gives zero targets") {
    const RompcDesign d = scalar_design();
    const StateSpaceModel fom = scalar_model(0.5, 1.0);
    const auto tgt = compute_setpoint_targets(fom, d.rom, d.K, d.L, d.Zbar, d.Ubar,
                                              Polytope::interval(-1, 1), Polytope::interval(-1, 1),
                                              {0}, Vector::Zero(1));
    CHECK(tgt.x_f_inf.norm() == doctest::Approx(0.0));
    CHECK(tgt.u_inf.norm() == doctest::Approx(0.0));
    CHECK(tgt.x_bar_inf.norm() == doctest::Approx(0.0));
    CHECK(tgt.u_bar_inf.norm() == doctest::Approx(0.0));
  }
  SUBCASE("scalar tracking oracle") {
    const RompcDesign d = scalar_design();
    const StateSpaceModel fom = scalar_model(0.5, 1.0);
    const Vector r = Vector::Constant(1, 0.2);
    const auto tgt = compute_setpoint_targets(fom, d.rom, d.K, d.L, d.Zbar, d.Ubar,
                                              Polytope::interval(-1, 1), Polytope::interval(-1, 1),
                                              {0}, r);
    CHECK(tgt.x_f_inf[0] == doctest::Approx(0.2).epsilon(1e-10));
    CHECK(tgt.u_inf[0] == doctest::Approx(0.1).epsilon(1e-10));
    // independent 2x2 solves for the estimator and simulated-model targets
    const double a = 0.5, b = 1.0, k = d.K(0, 0), l = d.L(0, 0);
    const double xhat = (b * 0.1 + l * 0.2) / (1.0 - (a - l));
    CHECK(tgt.x_hat_inf[0] == doctest::Approx(xhat).epsilon(1e-10));
    Matrix S(2, 2);
    S << a - 1.0, b, k, -1.0;
    Vector rhs(2);
    rhs << 0.0, k * xhat - 0.1;
    const Vector sol = S.fullPivLu().solve(rhs);
    CHECK(tgt.x_bar_inf[0] == doctest::Approx(sol[0]).epsilon(1e-10));
    CHECK(tgt.u_bar_inf[0] == doctest::Approx(sol[1]).epsilon(1e-10));
  }
  SUBCASE("singular plant steady-state system rejected") {
    const RompcDesign d = scalar_design();
    const StateSpaceModel fom = scalar_model(0.5, 0.0);  // no actuator
    CHECK_THROWS_WITH_AS(
        compute_setpoint_targets(fom, d.rom, d.K, d.L, d.Zbar, d.Ubar, Polytope::interval(-1, 1),
                                 Polytope::interval(-1, 1), {0}, Vector::Constant(1, 0.2)),
        doctest::Contains("rank deficient"), Error);
  }
  SUBCASE("target outside the tightened sets rejected with margins") {
    const RompcDesign d = scalar_design();
    const StateSpaceModel fom = scalar_model(0.5, 1.0);
    CHECK_THROWS_WITH_AS(
        compute_setpoint_targets(fom, d.rom, d.K, d.L, d.Zbar, d.Ubar, Polytope::interval(-5, 5),
                                 Polytope::interval(-5, 5), {0}, Vector::Constant(1, 3.0)),
        doctest::Contains("margins"), Error);
  }
}

TEST_CASE("controller step algebra") {
  SUBCASE("all-zero loop stays zero") {
    const RompcDesign d = scalar_design();
    RompcController ctl(d, make_ocp_spec(d, Vector::Zero(1), Vector::Zero(1)), 3);
    for (int k = 0; k < 6; ++k) {
      const auto out = ctl.step(Vector::Zero(1));
      CHECK(out.u.norm() == doctest::Approx(0.0));
      CHECK(out.u_bar.norm() == doctest::Approx(0.0));
    }
    CHECK(ctl.state().x_bar.norm() == doctest::Approx(0.0));
    CHECK(ctl.state().x_hat.norm() == doctest::Approx(0.0));
  }
  SUBCASE("startup reversal identity") {
    const RompcDesign d = scalar_design();
    StartupSpec startup;
    startup.kind = StartupKind::OpenLoop;
    startup.sequence = {Vector::Constant(1, 0.3), Vector::Constant(1, -0.2),
                        Vector::Constant(1, 0.1)};
    RompcController ctl(d, make_ocp_spec(d, Vector::Zero(1), Vector::Zero(1)), 100, startup);
    auto gen = testutil::rng(503);
    for (int k = 0; k < 10; ++k) {
      const Vector xh = ctl.state().x_hat, xb = ctl.state().x_bar;
      const auto out = ctl.step(random_matrix(gen, 1, 1));
      // u = ubar + K (xhat - xbar) reconstructs exactly
      CHECK(out.u[0] ==
            doctest::Approx(out.u_bar[0] + d.K(0, 0) * (xh[0] - xb[0])).epsilon(1e-14));
    }
  }
  SUBCASE("optimizing phase matches a hand-run optimizer") {
    const RompcDesign d = scalar_design();
    RompcController ctl(d, make_ocp_spec(d, Vector::Zero(1), Vector::Zero(1)), 0);
    auto gen = testutil::rng(509);
    // drive with a few random measurements, mirror the recursion by hand
    Vector xb = Vector::Zero(1), xh = Vector::Zero(1);
    ocp::OcpSolver mirror(make_ocp_spec(d, Vector::Zero(1), Vector::Zero(1)));
    for (int k = 0; k < 8; ++k) {
      const Vector y = 0.1 * random_matrix(gen, 1, 1);
      const auto out = ctl.step(y);
      const auto sol = mirror.solve(xb);
      const double u_expected = sol.u0[0] + d.K(0, 0) * (xh[0] - xb[0]);
      CHECK(out.u[0] == doctest::Approx(u_expected).epsilon(1e-9));
      xb = d.rom.A * xb + d.rom.B * sol.u0;
      xh = d.rom.A * xh + d.rom.B * Vector::Constant(1, out.u[0]) +
           d.L * (y - d.rom.C * xh);
    }
  }
}

TEST_CASE("closed-loop simulation basics on a small benchmark") {
  bench::HeatBenchmarkOptions hopts;
  hopts.nf = 40;
  hopts.rom_dim = 6;
  hopts.tau = 40;
  hopts.eta_init = 1.0;
  hopts.horizon = 8;
  const ProblemSpec problem = bench::make_heat_benchmark(hopts);
  const auto synth = pipeline::run_synthesis(problem);

  SUBCASE("zero everything stays zero") {
    SimOptions so;
    so.steps = 50;
    so.k0 = 10;
    so.disturbance = DisturbancePolicy::Zero;
    const TrajectoryLog lg = simulate_closed_loop(problem, synth.design, so);
    lg.validate();
    CHECK(lg.z.cwiseAbs().maxCoeff() == doctest::Approx(0.0));
    CHECK(lg.u.cwiseAbs().maxCoeff() == doctest::Approx(0.0));
    CHECK(lg.infeasible_at == -1);
  }
  SUBCASE("deterministic for a fixed seed") {
    SimOptions so;
    so.steps = 30;
    so.k0 = 5;
    so.seed = 42;
    so.setpoint = Vector::Constant(1, 0.3);
    const TrajectoryLog a = simulate_closed_loop(problem, synth.design, so);
    const TrajectoryLog b = simulate_closed_loop(problem, synth.design, so);
    CHECK((a.z - b.z).cwiseAbs().maxCoeff() == 0.0);
    CHECK((a.u - b.u).cwiseAbs().maxCoeff() == 0.0);
    CHECK((a.w - b.w).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("setpoint tracking converges without disturbances") {
    SimOptions so;
    so.steps = 420;
    so.k0 = 10;
    so.disturbance = DisturbancePolicy::Zero;
    so.setpoint = Vector::Constant(1, 0.4);
    const TrajectoryLog lg = simulate_closed_loop(problem, synth.design, so);
    REQUIRE(lg.infeasible_at == -1);
    const Index last = lg.steps() - 1;
    CHECK(std::abs(lg.z(0, last) - 0.4) < 1e-6);
    // constraints hold over the optimizing phase
    for (Index k = lg.k0; k <= last; ++k) {
      CHECK(lg.z_in_Z[k]);
      CHECK(lg.u_in_U[k]);
    }
  }
}

TEST_CASE("continuous-time controller consistency") {
  // 2-state continuous plant, reduced to 1 state
  auto gen = testutil::rng(521);
  StateSpaceModel ct;
  ct.A = Matrix::Zero(2, 2);
  ct.A << -1.0, 0.3, 0.1, -2.5;
  ct.B = Matrix(2, 1);
  ct.B << 1.0, 0.4;
  ct.Bw = Matrix(2, 0);
  ct.C = Matrix(1, 2);
  ct.C << 1.0, 0.2;
  ct.H = Matrix(1, 2);
  ct.H << 0.8, 0.5;
  ct.time_domain = TimeDomain::Continuous;

  Vector hsv;
  const auto basis = reduction::reduce_with_split(ct, 1, 1e-8, &hsv);
  const auto rom = reduction::petrov_galerkin_project(ct, basis).rom;
  const Polytope Z = Polytope::interval(-2.0, 2.0, "Z");
  const Polytope U = Polytope::interval(-1.0, 1.0, "U");
  const auto gains = synthesis::riccati_gains(ct, rom, basis, Matrix::Identity(1, 1),
                                              Matrix::Identity(1, 1), 1e-3, Z.H, U.H);
  REQUIRE(gains.accepted);

  RompcDesign d;
  d.rom = rom;
  d.V_basis = basis.V;
  d.W_basis = basis.W;
  d.K = gains.K;
  d.L = gains.L;
  d.Q = Matrix::Identity(1, 1);
  d.R = Matrix::Identity(1, 1);
  d.Zbar = Z;
  d.Ubar = U;
  d.delta_z = Vector::Zero(2);
  d.delta_u = Vector::Zero(2);
  d.N = 8;
  d.time_domain = TimeDomain::Continuous;
  d.dt = 0.0;
  d.rho_Aeps = gains.rho_Aeps;
  d.qp_tol = 1e-10;
  const double dt_ocp = 0.1;
  const StateSpaceModel rom_zoh = zoh_discretize(rom, dt_ocp);
  const auto ti = ocp::terminal_ingredients(rom_zoh, d.Q, d.R, Z, U, Vector::Zero(1),
                                            Vector::Zero(1));
  d.P = ti.P;
  d.Kf = ti.Kf;
  d.Xf = ti.Xf;

  CtSimOptions co;
  co.t_final = 2.0;
  co.t0 = 0.4;
  co.dt_ocp = dt_ocp;
  co.dt_ctrl = dt_ocp / 5.0;
  co.disturbance = DisturbancePolicy::Zero;
  Vector x0(2);
  x0 << 0.5, -0.2;
  co.x_f_init = x0;

  const TrajectoryLog lg = simulate_closed_loop_ct(ct, d, Z, U, Polytope::origin_point(0),
                                                   Polytope::origin_point(1), co);
  lg.validate();

  // sampled equivalence: between optimizer instants the simulated model
  // composes five exact dt_ctrl flows into exactly one dt_ocp ZOH step
  const long ratio = 5;
  const long k0 = lg.k0;
  for (Index k = k0; k + ratio < lg.steps(); k += ratio) {
    const Vector xk = lg.x_bar.col(k);
    const Vector uk = lg.u_bar.col(k);
    const Vector expected = rom_zoh.A * xk + rom_zoh.B * uk;
    CHECK((lg.x_bar.col(k + ratio) - expected).norm() <= 1e-8 * (1.0 + expected.norm()));
  }
  // measurement-held controls stay piecewise constant between solves
  for (Index k = k0; k + 1 < lg.steps(); ++k) {
    if ((k - k0) % ratio != 0) CHECK(lg.u_bar(0, k) == doctest::Approx(lg.u_bar(0, k - 1)));
  }
}

TEST_CASE("trajectory log validation catches ragged records") {
  TrajectoryLog lg;
  lg.k = {0, 1};
  lg.t = Vector::Zero(2);
  lg.x_bar = Matrix::Zero(1, 2);
  lg.x_hat = Matrix::Zero(1, 2);
  lg.u = Matrix::Zero(1, 1);  // ragged
  lg.u_bar = Matrix::Zero(1, 2);
  lg.y = Matrix::Zero(1, 2);
  lg.z = Matrix::Zero(1, 2);
  lg.z_bar = Matrix::Zero(1, 2);
  lg.ocp_status = {0, 0};
  lg.solve_time = {0, 0};
  lg.z_in_Z = {true, true};
  lg.u_in_U = {true, true};
  CHECK_THROWS_AS(lg.validate(), Error);
}
