#include "rompc/pipeline.hpp"

#include <chrono>

#include "rompc/log.hpp"
#include "rompc/ocp.hpp"
#include "rompc/reduction.hpp"

namespace rompc::pipeline {

namespace {

using Clock = std::chrono::steady_clock;

struct StageClock {
  std::vector<StageTiming>& timings;
  std::string name;
  Clock::time_point begin = Clock::now();
  StageClock(std::vector<StageTiming>& t, std::string n) : timings(t), name(std::move(n)) {}
  ~StageClock() {
    timings.push_back({name, std::chrono::duration<double>(Clock::now() - begin).count()});
  }
};

Matrix regularized_state_cost(const StateSpaceModel& rom, const std::optional<Matrix>& Q_projected,
                              const Matrix& Wz, double gamma_reg, std::vector<CheckResult>& checks) {
  Matrix Q = Q_projected ? *Q_projected
                         : Matrix(rom.H.transpose() * Wz.transpose() * Wz * rom.H);
  Q = 0.5 * (Q + Q.transpose()).eval();
  Eigen::LDLT<Matrix> ldlt(Q);
  const bool pd = ldlt.info() == Eigen::Success && ldlt.isPositive() &&
                  ldlt.vectorD().minCoeff() > 1e-12 * std::max(1.0, Q.norm());
  if (!pd) {
    Q += gamma_reg * Matrix::Identity(rom.n(), rom.n());
    checks.push_back({"state cost positive definite", CheckStatus::Pass,
                      "regularized with gamma = " + std::to_string(gamma_reg)});
  } else {
    checks.push_back({"state cost positive definite", CheckStatus::Pass, ""});
  }
  return Q;
}

}  // namespace

bool RunReport::all_checks_pass() const {
  for (const auto& c : checks)
    if (c.status == CheckStatus::Fail) return false;
  return true;
}

SynthesisResult run_synthesis(const ProblemSpec& problem, const SynthesisOptions& opts) {
  problem.validate();
  if (!problem.fom.is_discrete())
    throw Error("synthesis: continuous-time problems must be discretized first "
                "(zero-order hold) or driven through the continuous-time front end");

  SynthesisResult out;
  RunReport& rep = out.report;
  const StateSpaceModel& fom = problem.fom;
  rep.nf = fom.n();
  rep.m = fom.m();
  rep.p = fom.p();
  rep.o = fom.o();
  rep.mw = fom.mw();
  rep.n = problem.rom_dim;

  const double gamma_reg = opts.gamma_reg.value_or(problem.gamma_reg);
  const int tau = opts.tau.value_or(problem.tau);
  const int horizon = opts.horizon.value_or(problem.horizon);
  const bool skip_delta1 = opts.skip_delta1.value_or(problem.skip_delta1);

  // model reduction
  reduction::ProjectionBasis basis;
  StateSpaceModel rom;
  std::optional<Matrix> Q_projected;
  {
    StageClock sc(rep.timings, "reduction");
    Vector hsv;
    basis = reduction::reduce_with_split(fom, problem.rom_dim, problem.marginal_tol, &hsv);
    rep.hankel_singular_values = hsv;
    const Matrix* Qf = problem.Qf ? &*problem.Qf : nullptr;
    auto projected = reduction::petrov_galerkin_project(fom, basis, Qf);
    rom = std::move(projected.rom);
    Q_projected = std::move(projected.Q);
  }

  // gain synthesis
  synthesis::GainPair gains;
  {
    StageClock sc(rep.timings, "gains");
    gains = synthesis::riccati_gains(fom, rom, basis, problem.Wz, problem.Wu, gamma_reg,
                                     problem.Z.H, problem.U.H);
    rep.rho_Aeps = gains.rho_Aeps;
    rep.h2_reduced = gains.h2_reduced;
    if (!gains.accepted)
      throw Error(
          "synthesis stage 'gains': the reduced-order Riccati method failed to stabilize the "
          "closed-loop error dynamics (spectral radius " +
          std::to_string(gains.rho_Aeps) +
          "). Verify the reduced model's accuracy (e.g. by simulation); for moderately sized "
          "problems, consider optimizing the gains against the full-order error system with a "
          "stability constraint.");
    rep.checks.push_back({"error dynamics Schur stable", CheckStatus::Pass,
                          "rho = " + std::to_string(gains.rho_Aeps)});
    try {
      rep.r_h2 = reduction::relative_h2_error(fom, rom);
    } catch (const Error&) {
      rep.r_h2 = std::nullopt;  // undefined for unstable plants
    }
  }

  const synthesis::ErrorSystem err =
      synthesis::assemble_error_system(fom, rom, basis, gains.K, gains.L, problem.Z.H, problem.U.H);

  // error bounds
  bounds::DecayParameters decay;
  {
    StageClock sc(rep.timings, "bounds");
    bounds::BoundsOptions bo;
    bo.tau = tau;
    bo.eta_init = problem.eta_init;
    bo.i_bar = (problem.i_bar > 0) ? problem.i_bar : tau;
    bo.skip_delta1 = skip_delta1;
    bo.method = problem.decay_eigen_route ? bounds::DecayMethod::Eigenvalue
                                          : bounds::DecayMethod::Lyapunov;
    bo.eta = opts.eta ? opts.eta : problem.decay_eta;
    bo.jobs = opts.jobs;
    rep.bound_report = bounds::error_bounds(err, rom, problem.Z, problem.U, problem.W, problem.V,
                                            bo, &decay);
    if (skip_delta1) {
      rep.checks.push_back({"decay certificate", CheckStatus::Skipped,
                            "tail term waived by the large-tau argument"});
    } else {
      const double margin = decay.certificate_margin(err.dense_A(), {1, 2, 5, 10, 25, 50});
      rep.checks.push_back({"decay certificate", margin <= 1.0 + 1e-8 ? CheckStatus::Pass
                                                                      : CheckStatus::Fail,
                            "max |A_eps^i|_G / (M gamma^i) = " + std::to_string(margin)});
    }
  }

  // constraint tightening
  geometry::Polytope Zbar, Ubar;
  {
    StageClock sc(rep.timings, "tightening");
    geometry::TightenInfo zi, ui;
    Zbar = geometry::tighten(problem.Z, rep.bound_report.delta_z, &zi);
    Zbar.label = "Zbar";
    Ubar = geometry::tighten(problem.U, rep.bound_report.delta_u, &ui);
    Ubar.label = "Ubar";
    const bool ok = !zi.empty_warning && !ui.empty_warning && !zi.origin_excluded_warning &&
                    !ui.origin_excluded_warning;
    rep.checks.push_back({"tightened sets contain the origin",
                          ok ? CheckStatus::Pass : CheckStatus::Fail,
                          ok ? "" : "tightening exceeds the constraint offsets"});
    if (!ok)
      throw Error("synthesis stage 'tightening': the error bounds exceed the constraint offsets; "
                  "increase tau, shrink the disturbance sets, or improve the reduced model");
  }

  // terminal ingredients
  const Matrix Q = regularized_state_cost(rom, Q_projected, problem.Wz, gamma_reg, rep.checks);
  ocp::TerminalIngredients ti;
  {
    StageClock sc(rep.timings, "terminal");
    if (problem.terminal_equality) {
      ti.P = linalg::solve_dare(rom.A, rom.B, Q, problem.R);
      ti.Kf = -(rom.B.transpose() * ti.P * rom.B + problem.R)
                   .ldlt()
                   .solve(rom.B.transpose() * ti.P * rom.A);
      ti.Xf = geometry::Polytope::origin_point(rom.n(), "Xf");
      rep.checks.push_back({"terminal set", CheckStatus::Pass, "terminal equality"});
    } else {
      ti = ocp::terminal_ingredients(rom, Q, problem.R, Zbar, Ubar, Vector::Zero(rom.n()),
                                     Vector::Zero(rom.m()));
      rep.checks.push_back({"terminal set", CheckStatus::Pass,
                            "invariant set settled after " + std::to_string(ti.iterations) +
                                " iterations"});
    }
  }

  RompcDesign& d = out.design;
  d.rom = rom;
  d.V_basis = basis.V;
  d.W_basis = basis.W;
  d.K = gains.K;
  d.L = gains.L;
  d.P = ti.P;
  d.Kf = ti.Kf;
  d.Xf = ti.Xf;
  d.delta_z = rep.bound_report.delta_z;
  d.delta_u = rep.bound_report.delta_u;
  d.Zbar = Zbar;
  d.Ubar = Ubar;
  d.Q = Q;
  d.R = problem.R;
  d.N = horizon;
  d.dt = fom.dt;
  d.time_domain = fom.time_domain;
  d.rho_Aeps = gains.rho_Aeps;
  d.qp_tol = problem.qp_tol;
  d.validate();
  return out;
}

SynthesisResult rerun_bounds(const ProblemSpec& problem, const RompcDesign& design,
                             const SynthesisOptions& opts) {
  problem.validate();
  design.validate();

  SynthesisResult out;
  RunReport& rep = out.report;
  const StateSpaceModel& fom = problem.fom;
  rep.nf = fom.n();
  rep.n = design.rom.n();
  rep.m = fom.m();
  rep.p = fom.p();
  rep.o = fom.o();
  rep.mw = fom.mw();
  rep.rho_Aeps = design.rho_Aeps;

  reduction::ProjectionBasis basis;
  basis.V = design.V_basis;
  basis.W = design.W_basis;
  const synthesis::ErrorSystem err = synthesis::assemble_error_system(
      fom, design.rom, basis, design.K, design.L, problem.Z.H, problem.U.H);

  const int tau = opts.tau.value_or(problem.tau);
  const bool skip_delta1 = opts.skip_delta1.value_or(problem.skip_delta1);
  bounds::DecayParameters decay;
  {
    StageClock sc(rep.timings, "bounds");
    bounds::BoundsOptions bo;
    bo.tau = tau;
    bo.eta_init = problem.eta_init;
    bo.i_bar = (problem.i_bar > 0) ? problem.i_bar : tau;
    bo.skip_delta1 = skip_delta1;
    bo.method = problem.decay_eigen_route ? bounds::DecayMethod::Eigenvalue
                                          : bounds::DecayMethod::Lyapunov;
    bo.eta = opts.eta ? opts.eta : problem.decay_eta;
    bo.jobs = opts.jobs;
    rep.bound_report =
        bounds::error_bounds(err, design.rom, problem.Z, problem.U, problem.W, problem.V, bo, &decay);
  }

  out.design = design;
  geometry::TightenInfo zi, ui;
  out.design.delta_z = rep.bound_report.delta_z;
  out.design.delta_u = rep.bound_report.delta_u;
  out.design.Zbar = geometry::tighten(problem.Z, rep.bound_report.delta_z, &zi);
  out.design.Zbar.label = "Zbar";
  out.design.Ubar = geometry::tighten(problem.U, rep.bound_report.delta_u, &ui);
  out.design.Ubar.label = "Ubar";
  if (zi.empty_warning || ui.empty_warning || zi.origin_excluded_warning || ui.origin_excluded_warning)
    throw Error("bounds rerun: the error bounds exceed the constraint offsets");
  rep.checks.push_back({"tightened sets contain the origin", CheckStatus::Pass, ""});

  const ocp::TerminalIngredients ti =
      ocp::terminal_ingredients(design.rom, design.Q, design.R, out.design.Zbar, out.design.Ubar,
                                Vector::Zero(design.rom.n()), Vector::Zero(design.rom.m()));
  out.design.P = ti.P;
  out.design.Kf = ti.Kf;
  out.design.Xf = ti.Xf;
  out.design.validate();
  return out;
}

}  // namespace rompc::pipeline
