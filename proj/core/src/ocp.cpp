#include "rompc/ocp.hpp"

#include "rompc/linalg.hpp"
#include "rompc/log.hpp"

namespace rompc::ocp {

void OcpSpec::validate() const {
  rom.validate();
  if (!rom.is_discrete()) throw Error("OcpSpec: reduced model must be discrete-time");
  const Index n = rom.n(), m = rom.m();
  if (Q.rows() != n || Q.cols() != n) throw Error("OcpSpec: Q shape mismatch");
  if (R.rows() != m || R.cols() != m) throw Error("OcpSpec: R shape mismatch");
  if (P.rows() != n || P.cols() != n) throw Error("OcpSpec: P shape mismatch");
  if (Zbar.dim() != rom.o()) throw Error("OcpSpec: Zbar dimension mismatch");
  if (Ubar.dim() != m) throw Error("OcpSpec: Ubar dimension mismatch");
  if (Xf.dim() != n) throw Error("OcpSpec: Xf dimension mismatch");
  if (N < 1) throw Error("OcpSpec: horizon must be at least 1");
  if (x_target.size() != n || u_target.size() != m) throw Error("OcpSpec: target size mismatch");
  Eigen::LDLT<Matrix> q(Q), r(R), p(P);
  if (!q.isPositive() || Q.diagonal().minCoeff() <= 0)
    throw Error("OcpSpec: Q must be positive definite (regularize with Q + gamma I)");
  if (!r.isPositive() || R.diagonal().minCoeff() <= 0) throw Error("OcpSpec: R must be positive definite");
  if (!p.isPositive()) throw Error("OcpSpec: P must be positive definite");
}

TerminalIngredients terminal_ingredients(const StateSpaceModel& rom, const Matrix& Q,
                                         const Matrix& R, const Polytope& Zbar,
                                         const Polytope& Ubar, const Vector& x_target,
                                         const Vector& u_target, int max_iter) {
  rom.validate();
  const Index n = rom.n(), m = rom.m();
  if (x_target.size() != n || u_target.size() != m)
    throw Error("terminal_ingredients: target size mismatch");

  TerminalIngredients out;
  out.P = linalg::solve_dare(rom.A, rom.B, Q, R);
  out.Kf = -(rom.B.transpose() * out.P * rom.B + R)
                .ldlt()
                .solve(rom.B.transpose() * out.P * rom.A);
  const Matrix Ak = rom.A + rom.B * out.Kf;

  // base constraint rows in target-centered coordinates:
  //   Hz H (x_t + d) <= bz  and  Hu (u_t + Kf d) <= bu
  const Index qz = Zbar.num_rows(), qu = Ubar.num_rows();
  Matrix C0(qz + qu, n);
  C0.topRows(qz) = Zbar.H * rom.H;
  C0.bottomRows(qu) = Ubar.H * out.Kf;
  Vector d0(qz + qu);
  d0.head(qz) = Zbar.b - Zbar.H * rom.H * x_target;
  d0.tail(qu) = Ubar.b - Ubar.H * u_target;
  if (d0.minCoeff() < 0.0) {
    Index worst = 0;
    d0.minCoeff(&worst);
    throw Error("terminal_ingredients: target violates the tightened constraints (worst margin " +
                std::to_string(d0.minCoeff()) + " on row " + std::to_string(worst) + ")");
  }

  // Grow the face list with C0 A_k^i rows until the next generation is
  // redundant over the current set.
  std::vector<Vector> rows;
  std::vector<double> offs;
  for (Index r = 0; r < C0.rows(); ++r) {
    rows.push_back(C0.row(r).transpose());
    offs.push_back(d0[r]);
  }
  Matrix Ak_pow = Ak;
  bool converged = false;
  int it = 1;
  for (; it <= max_iter; ++it) {
    Polytope cur;
    cur.H.resize(static_cast<Index>(rows.size()), n);
    cur.b.resize(static_cast<Index>(rows.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
      cur.H.row(static_cast<Index>(r)) = rows[r].transpose();
      cur.b[static_cast<Index>(r)] = offs[r];
    }
    const Matrix Cnext = C0 * Ak_pow;
    bool all_redundant = true;
    std::vector<Index> to_add;
    for (Index r = 0; r < Cnext.rows(); ++r) {
      bool redundant;
      try {
        const double sup = geometry::support_max(Cnext.row(r).transpose(), cur);
        redundant = sup <= d0[r] + 1e-10 * (1.0 + std::abs(d0[r]));
      } catch (const geometry::UnboundedError&) {
        redundant = false;  // current set not yet bounded in this direction
      }
      if (!redundant) {
        all_redundant = false;
        to_add.push_back(r);
      }
    }
    if (all_redundant) {
      converged = true;
      break;
    }
    for (const Index r : to_add) {
      rows.push_back(Cnext.row(r).transpose());
      offs.push_back(d0[r]);
    }
    Ak_pow = Ak_pow * Ak;
  }
  if (!converged)
    throw Error("terminal_ingredients: invariant-set recursion did not settle within " +
                std::to_string(max_iter) +
                " iterations; consider scaling the target region down or a terminal equality");

  out.iterations = it;
  // back to absolute coordinates: C (x - x_t) <= d  ->  C x <= d + C x_t
  out.Xf.H.resize(static_cast<Index>(rows.size()), n);
  out.Xf.b.resize(static_cast<Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    out.Xf.H.row(static_cast<Index>(r)) = rows[r].transpose();
    out.Xf.b[static_cast<Index>(r)] = offs[r] + rows[r].dot(x_target);
  }
  out.Xf.label = "Xf";
  return out;
}

namespace {

struct Condensed {
  Matrix Phi;    // (N+1)n x n block column of A^i
  Matrix Gamma;  // (N+1)n x Nm lower block triangular of A^{i-1-j} B
};

Condensed condense(const StateSpaceModel& rom, int N) {
  const Index n = rom.n(), m = rom.m();
  Condensed c;
  c.Phi.resize((N + 1) * n, n);
  c.Gamma = Matrix::Zero((N + 1) * n, N * m);
  c.Phi.topRows(n) = Matrix::Identity(n, n);
  for (int i = 1; i <= N; ++i)
    c.Phi.middleRows(i * n, n) = rom.A * c.Phi.middleRows((i - 1) * n, n);
  for (int i = 1; i <= N; ++i) {
    for (int j = 0; j < i; ++j)
      c.Gamma.block(i * n, j * m, n, m) = c.Phi.middleRows((i - 1 - j) * n, n) * rom.B;
  }
  return c;
}

}  // namespace

solvers::QuadraticProgram build_qp(const OcpSpec& spec, const Vector& x0) {
  spec.validate();
  const Index n = spec.rom.n(), m = spec.rom.m();
  if (x0.size() != n) throw Error("build_qp: initial state size mismatch");
  const int N = spec.N;
  const Condensed c = condense(spec.rom, N);

  // stage cost blocks: Q for stages 0..N-1, P terminal
  Matrix Qbar = Matrix::Zero((N + 1) * n, (N + 1) * n);
  for (int i = 0; i < N; ++i) Qbar.block(i * n, i * n, n, n) = spec.Q;
  Qbar.block(N * n, N * n, n, n) = spec.P;
  Matrix Rbar = Matrix::Zero(N * m, N * m);
  for (int i = 0; i < N; ++i) Rbar.block(i * m, i * m, m, m) = spec.R;

  // dx_i = Phi x0 + Gamma u - x_t  stacked
  Vector xt_stack((N + 1) * n), ut_stack(N * m);
  for (int i = 0; i <= N; ++i) xt_stack.segment(i * n, n) = spec.x_target;
  for (int i = 0; i < N; ++i) ut_stack.segment(i * m, m) = spec.u_target;
  const Vector dev = c.Phi * x0 - xt_stack;

  solvers::QuadraticProgram qp;
  qp.P = c.Gamma.transpose() * Qbar * c.Gamma + Rbar;
  qp.P = 0.5 * (qp.P + qp.P.transpose()).eval();
  qp.q = c.Gamma.transpose() * Qbar * dev - Rbar * ut_stack;

  // constraints: Hz H x_i <= bz (i = 0..N-1), Hu u_i <= bu, terminal Xf
  const Index qz = spec.Zbar.num_rows(), qu = spec.Ubar.num_rows(), qf = spec.Xf.num_rows();
  const Index rows = N * qz + N * qu + qf;
  qp.A_ineq = Matrix::Zero(rows, N * m);
  qp.b_ineq.resize(rows);
  Index r0 = 0;
  const Matrix HzH = spec.Zbar.H * spec.rom.H;
  for (int i = 0; i < N; ++i, r0 += qz) {
    qp.A_ineq.middleRows(r0, qz) = HzH * c.Gamma.middleRows(i * n, n);
    qp.b_ineq.segment(r0, qz) = spec.Zbar.b - HzH * c.Phi.middleRows(i * n, n) * x0;
  }
  for (int i = 0; i < N; ++i, r0 += qu) {
    qp.A_ineq.block(r0, i * m, qu, m) = spec.Ubar.H;
    qp.b_ineq.segment(r0, qu) = spec.Ubar.b;
  }
  qp.A_ineq.middleRows(r0, qf) = spec.Xf.H * c.Gamma.middleRows(N * n, n);
  qp.b_ineq.segment(r0, qf) = spec.Xf.b - spec.Xf.H * c.Phi.middleRows(N * n, n) * x0;
  return qp;
}

struct OcpSolver::Impl {
  OcpSpec spec;
  Condensed cond;
  Matrix HzH;
  Matrix P_qp;  // fixed Hessian
  std::optional<solvers::QpSolver> qp;
  Vector last_controls;
  bool have_last = false;
  std::optional<Vector> warm_direct;

  explicit Impl(OcpSpec s) : spec(std::move(s)) {
    spec.validate();
    cond = condense(spec.rom, spec.N);
    HzH = spec.Zbar.H * spec.rom.H;
  }

  OcpSolution solve(const Vector& x0) {
    const Index n = spec.rom.n(), m = spec.rom.m();
    const int N = spec.N;
    if (x0.size() != n) throw Error("solve_ocp: initial state size mismatch");

      solvers::QuadraticProgram prog = build_qp(spec, x0);
    if (!qp) {
      solvers::QpOptions qo;
      qo.tol = spec.qp_tol;
      qp.emplace(prog, qo);
    } else {
      qp->set_q(prog.q);
      qp->set_bounds(prog.b_ineq, prog.b_eq);
    }
    if (warm_direct) {
      qp->warm_start(*warm_direct);
      warm_direct.reset();
    } else if (have_last) {
      // shift the previous optimal sequence, repeating the terminal move
      Vector warm = Vector::Zero(N * m);
      warm.head((N - 1) * m) = last_controls.tail((N - 1) * m);
      warm.tail(m) = last_controls.tail(m);
      qp->warm_start(warm);
    }
    OcpSolution sol;
    sol.status = qp->solve();
    sol.predicted_states.resize(n, N + 1);
    sol.predicted_controls.resize(m, N);
    if (sol.status.status == solvers::SolveResult::Optimal ||
        sol.status.status == solvers::SolveResult::MaxIter) {
      const Vector& u = sol.status.x;
      const Vector xs = cond.Phi * x0 + cond.Gamma * u;
      for (int i = 0; i <= N; ++i) sol.predicted_states.col(i) = xs.segment(i * n, n);
      for (int i = 0; i < N; ++i) sol.predicted_controls.col(i) = u.segment(i * m, m);
      sol.u0 = u.head(m);
      // full stage cost, evaluated directly on the trajectory
      double cost = 0.0;
      for (int i = 0; i <= N; ++i) {
        const Vector dx = xs.segment(i * n, n) - spec.x_target;
        cost += dx.dot(((i == N) ? spec.P : spec.Q) * dx);
      }
      for (int i = 0; i < N; ++i) {
        const Vector du = u.segment(i * m, m) - spec.u_target;
        cost += du.dot(spec.R * du);
      }
      sol.cost = cost;
      last_controls = u;
      have_last = true;
    } else {
      have_last = false;
    }
    return sol;
  }
};

OcpSolver::OcpSolver(OcpSpec spec) : impl_(std::make_unique<Impl>(std::move(spec))) {}
OcpSolver::~OcpSolver() = default;
OcpSolver::OcpSolver(OcpSolver&&) noexcept = default;

OcpSolution OcpSolver::solve(const Vector& x0) { return impl_->solve(x0); }

void OcpSolver::warm_start_controls(const Vector& u_stacked) {
  if (u_stacked.size() != impl_->spec.N * impl_->spec.rom.m())
    throw Error("warm_start_controls: stacked control size mismatch");
  impl_->warm_direct = u_stacked;
}

const OcpSpec& OcpSolver::spec() const { return impl_->spec; }

OcpSolution solve_ocp(const OcpSpec& spec, const Vector& x0,
                      const std::optional<Vector>& warm_controls) {
  OcpSolver solver(spec);
  if (warm_controls) solver.warm_start_controls(*warm_controls);
  return solver.solve(x0);
}

}  // namespace rompc::ocp
