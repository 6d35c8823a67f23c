#include "rompc/runtime.hpp"

#include <random>

#include "rompc/linalg.hpp"
#include "rompc/log.hpp"

namespace rompc::runtime {

SetpointTarget compute_setpoint_targets(const StateSpaceModel& fom, const StateSpaceModel& rom,
                                        const Matrix& K, const Matrix& L, const Polytope& Zbar,
                                        const Polytope& Ubar, const Polytope& Z, const Polytope& U,
                                        const std::vector<Index>& tracked, const Vector& r) {
  const Index nf = fom.n(), n = rom.n(), m = fom.m(), o = fom.o();
  const Index t = static_cast<Index>(tracked.size());
  if (t != m)
    throw Error("compute_setpoint_targets: the number of tracked variables (" + std::to_string(t) +
                ") must equal the number of control inputs (" + std::to_string(m) + ")");
  if (r.size() != t) throw Error("compute_setpoint_targets: reference size mismatch");
  Matrix T = Matrix::Zero(t, o);
  for (Index i = 0; i < t; ++i) {
    if (tracked[i] < 0 || tracked[i] >= o)
      throw Error("compute_setpoint_targets: tracked output index out of range");
    T(i, tracked[i]) = 1.0;
  }

  SetpointTarget out;
  out.r = r;

  // plant equilibrium
  Matrix Sf(nf + t, nf + m);
  Sf << fom.A - Matrix::Identity(nf, nf), fom.B, T * fom.H, Matrix::Zero(t, m);
  Vector rhs_f = Vector::Zero(nf + t);
  rhs_f.tail(t) = r;
  Eigen::FullPivLU<Matrix> lu_f(Sf);
  if (!lu_f.isInvertible())
    throw Error("compute_setpoint_targets: plant steady-state system is rank deficient");
  const Vector sol_f = lu_f.solve(rhs_f);
  out.x_f_inf = sol_f.head(nf);
  out.u_inf = sol_f.tail(m);
  if ((Sf * sol_f - rhs_f).norm() > 1e-8 * (1.0 + rhs_f.norm() + sol_f.norm()))
    throw Error("compute_setpoint_targets: plant steady-state residual too large");

  // estimator rest point
  const Matrix Aest = rom.A - L * rom.C;
  Eigen::FullPivLU<Matrix> lu_d(Matrix(Matrix::Identity(n, n) - Aest));
  if (!lu_d.isInvertible())
    throw Error("compute_setpoint_targets: I - (A - LC) is singular");
  out.x_hat_inf = lu_d.solve(rom.B * out.u_inf + L * (fom.C * out.x_f_inf));

  // simulated-model target
  Matrix S(n + m, n + m);
  S << rom.A - Matrix::Identity(n, n), rom.B, K, -Matrix::Identity(m, m);
  Vector rhs_r(n + m);
  rhs_r.head(n).setZero();
  rhs_r.tail(m) = K * out.x_hat_inf - out.u_inf;
  Eigen::FullPivLU<Matrix> lu_s(S);
  if (!lu_s.isInvertible())
    throw Error("compute_setpoint_targets: simulated-model steady-state system is rank deficient");
  const Vector sol_r = lu_s.solve(rhs_r);
  out.x_bar_inf = sol_r.head(n);
  out.u_bar_inf = sol_r.tail(m);
  if ((S * sol_r - rhs_r).norm() > 1e-8 * (1.0 + rhs_r.norm() + sol_r.norm()))
    throw Error("compute_setpoint_targets: simulated-model steady-state residual too large");

  // membership: tightened sets are hard requirements
  const Vector zbar_inf = rom.H * out.x_bar_inf;
  const Vector viol_z = Zbar.H * zbar_inf - Zbar.b;
  const Vector viol_u = Ubar.H * out.u_bar_inf - Ubar.b;
  if (viol_z.maxCoeff() > 1e-9 || viol_u.maxCoeff() > 1e-9) {
    std::string msg = "compute_setpoint_targets: target outside the tightened sets; margins:";
    for (Index i = 0; i < viol_z.size(); ++i)
      if (viol_z[i] > 1e-9) msg += " Zbar[" + std::to_string(i) + "]=+" + std::to_string(viol_z[i]);
    for (Index i = 0; i < viol_u.size(); ++i)
      if (viol_u[i] > 1e-9) msg += " Ubar[" + std::to_string(i) + "]=+" + std::to_string(viol_u[i]);
    throw Error(msg);
  }
  out.z_in_Z = geometry::contains(Z, Vector(fom.H * out.x_f_inf), 1e-9);
  out.u_in_U = geometry::contains(U, out.u_inf, 1e-9);
  if (!out.z_in_Z || !out.u_in_U)
    log::warn("compute_setpoint_targets: plant equilibrium violates the original constraints");
  return out;
}

StateSpaceModel zoh_discretize(const StateSpaceModel& ct_model, double dt) {
  ct_model.validate();
  if (ct_model.is_discrete()) throw Error("zoh_discretize: model is already discrete");
  if (!(dt > 0.0)) throw Error("zoh_discretize: dt must be positive");
  const Index n = ct_model.n(), m = ct_model.m(), mw = ct_model.mw();
  Matrix aug = Matrix::Zero(n + m + mw, n + m + mw);
  aug.topLeftCorner(n, n) = ct_model.A;
  aug.block(0, n, n, m) = ct_model.B;
  if (mw > 0) aug.block(0, n + m, n, mw) = ct_model.Bw;
  const Matrix E = linalg::matrix_exponential(aug, dt);
  StateSpaceModel d = ct_model;
  d.A = E.topLeftCorner(n, n);
  d.B = E.block(0, n, n, m);
  d.Bw = (mw > 0) ? Matrix(E.block(0, n + m, n, mw)) : Matrix(n, 0);
  d.time_domain = TimeDomain::Discrete;
  d.dt = dt;
  return d;
}

ocp::OcpSpec make_ocp_spec(const RompcDesign& design, const Vector& x_target,
                           const Vector& u_target) {
  ocp::OcpSpec spec;
  spec.rom = design.rom;
  spec.Zbar = design.Zbar;
  spec.Ubar = design.Ubar;
  spec.Q = design.Q;
  spec.R = design.R;
  spec.P = design.P;
  spec.N = design.N;
  spec.qp_tol = design.qp_tol;
  spec.x_target = x_target;
  spec.u_target = u_target;
  if (x_target.cwiseAbs().maxCoeff() > 0.0 || u_target.cwiseAbs().maxCoeff() > 0.0) {
    // terminal set recentered on the target
    const auto ti = ocp::terminal_ingredients(design.rom, design.Q, design.R, design.Zbar,
                                              design.Ubar, x_target, u_target);
    spec.Xf = ti.Xf;
  } else {
    spec.Xf = design.Xf;
  }
  return spec;
}

namespace {

Vector startup_control(const StartupSpec& startup, long k, const Vector& x_hat, Index m) {
  switch (startup.kind) {
    case StartupKind::Zero:
      return Vector::Zero(m);
    case StartupKind::StaticGain:
      if (startup.Ks.rows() != m || startup.Ks.cols() != x_hat.size())
        throw Error("startup: static gain shape mismatch");
      return startup.Ks * x_hat;
    case StartupKind::OpenLoop: {
      if (startup.sequence.empty()) throw Error("startup: open-loop sequence is empty");
      const std::size_t idx = std::min<std::size_t>(k, startup.sequence.size() - 1);
      if (startup.sequence[idx].size() != m) throw Error("startup: open-loop input size mismatch");
      return startup.sequence[idx];
    }
  }
  throw Error("startup: unknown policy");
}

class BoxSampler {
 public:
  BoxSampler(const Polytope& S, DisturbancePolicy policy, std::mt19937_64& rng)
      : policy_(policy), rng_(rng) {
    dim_ = S.dim();
    if (dim_ == 0 || policy == DisturbancePolicy::Zero) {
      zero_ = true;
      return;
    }
    const auto box = S.as_box();
    if (box) {
      lo_ = box->first;
      hi_ = box->second;
    } else if (policy == DisturbancePolicy::Vertex) {
      vertices_ = geometry::enumerate_vertices(S);
    } else {
      throw Error("simulate: uniform disturbance sampling requires box sets; '" + S.label +
                  "' is not a box");
    }
  }

  Vector draw() {
    if (zero_) return Vector::Zero(dim_);
    if (!vertices_.empty()) {
      std::uniform_int_distribution<std::size_t> pick(0, vertices_.size() - 1);
      return vertices_[pick(rng_)];
    }
    Vector v(dim_);
    if (policy_ == DisturbancePolicy::Vertex) {
      std::uniform_int_distribution<int> coin(0, 1);
      for (Index i = 0; i < dim_; ++i) v[i] = coin(rng_) ? hi_[i] : lo_[i];
    } else {
      for (Index i = 0; i < dim_; ++i) {
        std::uniform_real_distribution<double> unif(lo_[i], hi_[i]);
        v[i] = unif(rng_);
      }
    }
    return v;
  }

 private:
  DisturbancePolicy policy_;
  std::mt19937_64& rng_;
  Index dim_ = 0;
  bool zero_ = false;
  Vector lo_, hi_;
  std::vector<Vector> vertices_;
};

}  // namespace

struct RompcController::Impl {
  Matrix K, L;
  StateSpaceModel rom;
  ocp::OcpSolver ocp;
  StartupSpec startup;
  ControllerState st;

  Impl(const RompcDesign& design, ocp::OcpSpec spec, long k0, StartupSpec startup_in)
      : K(design.K), L(design.L), rom(design.rom), ocp(std::move(spec)),
        startup(std::move(startup_in)) {
    st.x_bar = Vector::Zero(rom.n());
    st.x_hat = Vector::Zero(rom.n());
    st.k = 0;
    st.k0 = k0;
    st.rompc_phase = (k0 <= 0);
  }

  StepOutput step(const Vector& y) {
    if (y.size() != rom.p()) throw Error("rompc step: measurement size mismatch");
    StepOutput out;
    if (st.k >= st.k0) {
      st.rompc_phase = true;
      const ocp::OcpSolution sol = ocp.solve(st.x_bar);
      out.ocp_status = static_cast<int>(sol.status.status);
      out.solve_time = sol.status.solve_time;
      if (sol.status.status == solvers::SolveResult::Infeasible)
        throw OcpInfeasibleError("rompc step: optimizer infeasible at step " + std::to_string(st.k),
                                 st.k);
      if (sol.status.status == solvers::SolveResult::Unbounded)
        throw Error("rompc step: optimizer reported an unbounded problem");
      out.cost = sol.cost;
      out.u_bar = sol.u0;
      out.u = out.u_bar + K * (st.x_hat - st.x_bar);
    } else {
      out.u = startup_control(startup, st.k, st.x_hat, rom.m());
      out.u_bar = out.u - K * (st.x_hat - st.x_bar);
      out.ocp_status = -1;
    }
    st.x_bar = rom.A * st.x_bar + rom.B * out.u_bar;
    st.x_hat = rom.A * st.x_hat + rom.B * out.u + L * (y - rom.C * st.x_hat);
    ++st.k;
    return out;
  }
};

RompcController::RompcController(const RompcDesign& design, ocp::OcpSpec ocp_spec, long k0,
                                 StartupSpec startup)
    : impl_(std::make_unique<Impl>(design, std::move(ocp_spec), k0, std::move(startup))) {}
RompcController::~RompcController() = default;
RompcController::RompcController(RompcController&&) noexcept = default;

StepOutput RompcController::step(const Vector& y) { return impl_->step(y); }
const ControllerState& RompcController::state() const { return impl_->st; }

TrajectoryLog simulate_closed_loop(const ProblemSpec& problem, const RompcDesign& design,
                                   const SimOptions& opts) {
  problem.fom.validate();
  design.validate();
  const StateSpaceModel& fom = problem.fom;
  const Index nf = fom.n(), m = fom.m(), p = fom.p(), o = fom.o(), n = design.rom.n();
  if (design.rom.p() != p || design.rom.m() != m || design.rom.o() != o)
    throw Error("simulate: design and problem dimensions are incompatible");
  if (design.V_basis.rows() != nf)
    throw Error("simulate: design basis does not match the plant dimension");

  Vector x_target = Vector::Zero(n), u_target = Vector::Zero(m);
  if (opts.setpoint && opts.setpoint->size() > 0) {
    std::vector<Index> tracked = opts.tracked_outputs.empty() ? problem.tracked_outputs
                                                              : opts.tracked_outputs;
    if (tracked.empty())
      for (Index i = 0; i < m; ++i) tracked.push_back(i);
    const SetpointTarget tgt =
        compute_setpoint_targets(fom, design.rom, design.K, design.L, design.Zbar, design.Ubar,
                                 problem.Z, problem.U, tracked, *opts.setpoint);
    x_target = tgt.x_bar_inf;
    u_target = tgt.u_bar_inf;
  }

  RompcController controller(design, make_ocp_spec(design, x_target, u_target), opts.k0,
                             opts.startup);

  const Eigen::SparseMatrix<double> A_sp = fom.A.sparseView();
  Vector x_f = opts.x_f_init.value_or(Vector::Zero(nf));
  if (x_f.size() != nf) throw Error("simulate: initial plant state size mismatch");

  std::mt19937_64 rng(opts.seed);
  BoxSampler wdraw(problem.W, fom.mw() > 0 ? opts.disturbance : DisturbancePolicy::Zero, rng);
  BoxSampler vdraw(problem.V, opts.disturbance, rng);

  const long total = opts.k0 + opts.steps;
  TrajectoryLog lg;
  lg.k0 = opts.k0;
  lg.k.reserve(total);
  lg.t.resize(total);
  lg.x_bar.resize(n, total);
  lg.x_hat.resize(n, total);
  lg.u.resize(m, total);
  lg.u_bar.resize(m, total);
  lg.y.resize(p, total);
  lg.z.resize(o, total);
  lg.z_bar.resize(o, total);
  lg.w.resize(fom.mw(), total);
  lg.v.resize(p, total);

  for (long k = 0; k < total; ++k) {
    const Vector w = wdraw.draw();
    const Vector v = vdraw.draw();
    const Vector y = fom.C * x_f + v;
    const Vector z = fom.H * x_f;

    lg.k.push_back(k);
    lg.t[k] = k * fom.dt;
    lg.x_bar.col(k) = controller.state().x_bar;
    lg.x_hat.col(k) = controller.state().x_hat;
    lg.z_bar.col(k) = design.rom.H * controller.state().x_bar;
    lg.y.col(k) = y;
    lg.z.col(k) = z;
    if (fom.mw() > 0) lg.w.col(k) = w;
    lg.v.col(k) = v;

    StepOutput out;
    try {
      out = controller.step(y);
    } catch (const OcpInfeasibleError&) {
      lg.infeasible_at = k;
      lg.ocp_status.push_back(static_cast<int>(solvers::SolveResult::Infeasible));
      lg.solve_time.push_back(0.0);
      lg.u.col(k).setZero();
      lg.u_bar.col(k).setZero();
      lg.z_in_Z.push_back(geometry::contains(problem.Z, z, 1e-9));
      lg.u_in_U.push_back(true);
      // truncate the log at the failure step
      const long kept = k + 1;
      lg.t.conservativeResize(kept);
      lg.x_bar.conservativeResize(n, kept);
      lg.x_hat.conservativeResize(n, kept);
      lg.u.conservativeResize(m, kept);
      lg.u_bar.conservativeResize(m, kept);
      lg.y.conservativeResize(p, kept);
      lg.z.conservativeResize(o, kept);
      lg.z_bar.conservativeResize(o, kept);
      lg.w.conservativeResize(fom.mw(), kept);
      lg.v.conservativeResize(p, kept);
      if (!opts.stop_on_infeasible) throw;
      return lg;
    }
    lg.u.col(k) = out.u;
    lg.u_bar.col(k) = out.u_bar;
    lg.ocp_status.push_back(out.ocp_status);
    lg.solve_time.push_back(out.solve_time);
    lg.z_in_Z.push_back(geometry::contains(problem.Z, z, 1e-9));
    lg.u_in_U.push_back(geometry::contains(problem.U, out.u, 1e-9));

    x_f = A_sp * x_f + fom.B * out.u;
    if (fom.mw() > 0) x_f += fom.Bw * w;
  }
  return lg;
}

void TrajectoryLog::validate() const {
  const Index s = steps();
  if (t.size() != s || x_bar.cols() != s || x_hat.cols() != s || u.cols() != s ||
      u_bar.cols() != s || y.cols() != s || z.cols() != s || z_bar.cols() != s ||
      static_cast<Index>(ocp_status.size()) != s || static_cast<Index>(z_in_Z.size()) != s)
    throw Error("TrajectoryLog: inconsistent record lengths");
}

// ---------------------------------------------------------------------------
// continuous time

struct CtRompcController::Impl {
  Matrix K;
  Matrix Ar, Br;          // simulated-model flow over dt_ctrl
  Matrix Ae, Be_u, Be_y;  // estimator flow over dt_ctrl
  ocp::OcpSolver ocp;
  StartupSpec startup;
  ControllerState st;
  long ratio;
  Vector u_bar_held;
  double dt_ctrl;

  Impl(const RompcDesign& design, ocp::OcpSpec spec, double t0, double dt_ctrl_in, double dt_ocp,
       StartupSpec startup_in)
      : K(design.K), ocp(std::move(spec)), startup(std::move(startup_in)), dt_ctrl(dt_ctrl_in) {
    if (design.time_domain != TimeDomain::Continuous)
      throw Error("ct controller: design must be continuous-time");
    if (!(dt_ctrl > 0.0) || !(dt_ocp > 0.0)) throw Error("ct controller: periods must be positive");
    const double q = dt_ocp / dt_ctrl;
    ratio = static_cast<long>(std::llround(q));
    if (ratio < 1 || std::abs(q - ratio) > 1e-9)
      throw Error("ct controller: dt_ocp must be an integer multiple of dt_ctrl");

    const StateSpaceModel& rom = design.rom;
    const Index n = rom.n(), m = rom.m(), p = rom.p();
    // simulated model flow
    StateSpaceModel rom_flow = rom;
    const StateSpaceModel rd = zoh_discretize(rom_flow, dt_ctrl);
    Ar = rd.A;
    Br = rd.B;
    // estimator flow: d xhat = (A - LC) xhat + [B, L] [u; y]
    StateSpaceModel est;
    est.A = rom.A - design.L * rom.C;
    est.B = Matrix(n, m + p);
    est.B << rom.B, design.L;
    est.Bw = Matrix(n, 0);
    est.C = Matrix::Identity(n, n);
    est.H = Matrix::Identity(n, n);
    est.time_domain = TimeDomain::Continuous;
    const StateSpaceModel ed = zoh_discretize(est, dt_ctrl);
    Ae = ed.A;
    Be_u = ed.B.leftCols(m);
    Be_y = ed.B.rightCols(p);

    st.x_bar = Vector::Zero(n);
    st.x_hat = Vector::Zero(n);
    st.k = 0;
    st.k0 = static_cast<long>(std::llround(t0 / dt_ctrl));
    st.rompc_phase = (st.k0 <= 0);
    u_bar_held = Vector::Zero(m);
  }

  StepOutput step(const Vector& y) {
    StepOutput out;
    if (st.k >= st.k0) {
      st.rompc_phase = true;
      if ((st.k - st.k0) % ratio == 0) {
        const ocp::OcpSolution sol = ocp.solve(st.x_bar);
        out.ocp_status = static_cast<int>(sol.status.status);
        out.solve_time = sol.status.solve_time;
        if (sol.status.status == solvers::SolveResult::Infeasible)
          throw OcpInfeasibleError("ct rompc step: optimizer infeasible", st.k);
        if (sol.status.status == solvers::SolveResult::Unbounded)
          throw Error("ct rompc step: optimizer reported an unbounded problem");
        u_bar_held = sol.u0;
        out.cost = sol.cost;
      }
      out.u_bar = u_bar_held;
      out.u = u_bar_held + K * (st.x_hat - st.x_bar);
    } else {
      out.u = startup_control(startup, st.k, st.x_hat, K.rows());
      out.u_bar = out.u - K * (st.x_hat - st.x_bar);
      out.ocp_status = -1;
      u_bar_held = out.u_bar;
    }
    st.x_bar = Ar * st.x_bar + Br * out.u_bar;
    st.x_hat = Ae * st.x_hat + Be_u * out.u + Be_y * y;
    ++st.k;
    return out;
  }
};

CtRompcController::CtRompcController(const RompcDesign& design_ct, ocp::OcpSpec ocp_spec_zoh,
                                     double t0, double dt_ctrl, double dt_ocp, StartupSpec startup)
    : impl_(std::make_unique<Impl>(design_ct, std::move(ocp_spec_zoh), t0, dt_ctrl, dt_ocp,
                                   std::move(startup))) {}
CtRompcController::~CtRompcController() = default;
CtRompcController::CtRompcController(CtRompcController&&) noexcept = default;

StepOutput CtRompcController::step(const Vector& y) { return impl_->step(y); }
const ControllerState& CtRompcController::state() const { return impl_->st; }

TrajectoryLog simulate_closed_loop_ct(const StateSpaceModel& fom_ct, const RompcDesign& design_ct,
                                      const Polytope& Z, const Polytope& U, const Polytope& W,
                                      const Polytope& V, const CtSimOptions& opts) {
  fom_ct.validate();
  if (fom_ct.is_discrete()) throw Error("simulate_ct: plant must be continuous-time");
  if (!(opts.dt_ctrl > 0.0) || !(opts.dt_ocp > 0.0))
    throw Error("simulate_ct: dt_ctrl and dt_ocp must be positive");

  // the optimizer runs on the ZOH model at the dt_ocp rate
  StateSpaceModel rom_zoh = zoh_discretize(design_ct.rom, opts.dt_ocp);
  RompcDesign d_zoh = design_ct;
  d_zoh.rom = rom_zoh;
  d_zoh.time_domain = TimeDomain::Discrete;
  d_zoh.dt = opts.dt_ocp;
  ocp::OcpSpec spec = make_ocp_spec(d_zoh, Vector::Zero(rom_zoh.n()), Vector::Zero(rom_zoh.m()));

  CtRompcController controller(design_ct, std::move(spec), opts.t0, opts.dt_ctrl, opts.dt_ocp,
                               opts.startup);

  const StateSpaceModel plant = zoh_discretize(fom_ct, opts.dt_ctrl);
  const Index nf = fom_ct.n(), m = fom_ct.m(), p = fom_ct.p(), o = fom_ct.o(), n = design_ct.rom.n();
  Vector x_f = opts.x_f_init.value_or(Vector::Zero(nf));

  std::mt19937_64 rng(opts.seed);
  BoxSampler wdraw(W, fom_ct.mw() > 0 ? opts.disturbance : DisturbancePolicy::Zero, rng);
  BoxSampler vdraw(V, opts.disturbance, rng);

  const long total = static_cast<long>(std::llround(opts.t_final / opts.dt_ctrl));
  TrajectoryLog lg;
  lg.k0 = controller.state().k0;
  lg.t.resize(total);
  lg.x_bar.resize(n, total);
  lg.x_hat.resize(n, total);
  lg.u.resize(m, total);
  lg.u_bar.resize(m, total);
  lg.y.resize(p, total);
  lg.z.resize(o, total);
  lg.z_bar.resize(o, total);
  lg.w.resize(fom_ct.mw(), total);
  lg.v.resize(p, total);

  for (long k = 0; k < total; ++k) {
    const Vector w = wdraw.draw();
    const Vector v = vdraw.draw();
    const Vector y = fom_ct.C * x_f + v;
    lg.k.push_back(k);
    lg.t[k] = k * opts.dt_ctrl;
    lg.x_bar.col(k) = controller.state().x_bar;
    lg.x_hat.col(k) = controller.state().x_hat;
    lg.z_bar.col(k) = design_ct.rom.H * controller.state().x_bar;
    lg.y.col(k) = y;
    lg.z.col(k) = fom_ct.H * x_f;
    if (fom_ct.mw() > 0) lg.w.col(k) = w;
    lg.v.col(k) = v;

    const StepOutput out = controller.step(y);
    lg.u.col(k) = out.u;
    lg.u_bar.col(k) = out.u_bar;
    lg.ocp_status.push_back(out.ocp_status);
    lg.solve_time.push_back(out.solve_time);
    lg.z_in_Z.push_back(geometry::contains(Z, Vector(lg.z.col(k)), 1e-9));
    lg.u_in_U.push_back(geometry::contains(U, out.u, 1e-9));

    x_f = plant.A * x_f + plant.B * out.u;
    if (fom_ct.mw() > 0) x_f += plant.Bw * w;
  }
  return lg;
}

}  // namespace rompc::runtime
