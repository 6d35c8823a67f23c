#include "rompc/qp.hpp"

#include <chrono>
#include <cmath>
#include <limits>

#include "rompc/log.hpp"

namespace rompc::solvers {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

struct QpSolver::Impl {
  using Clock = std::chrono::steady_clock;

  QpOptions opts;
  Index n = 0, me = 0, mi = 0, mrows = 0;
  Matrix P;
  Vector q;
  Matrix A;      // stacked [A_eq; A_ineq]
  Vector lo, up;

  Vector rho_vec;
  double rho_bar;
  Eigen::LDLT<Matrix> kkt;

  Vector x, y, z;
  bool have_iterate = false;

  Impl(QuadraticProgram qp, QpOptions o) : opts(o) {
    n = qp.num_vars();
    me = qp.A_eq.rows();
    mi = qp.A_ineq.rows();
    mrows = me + mi;
    if (qp.P.rows() != n || qp.P.cols() != n) throw Error("solve_qp: P dimension mismatch");
    if ((qp.P - qp.P.transpose()).norm() > 1e-8 * (1.0 + qp.P.norm()))
      throw Error("solve_qp: P must be symmetric");
    if (mi > 0 && qp.A_ineq.cols() != n) throw Error("solve_qp: A_ineq column mismatch");
    if (me > 0 && qp.A_eq.cols() != n) throw Error("solve_qp: A_eq column mismatch");
    if (qp.b_ineq.size() != mi || qp.b_eq.size() != me) throw Error("solve_qp: rhs size mismatch");

    P = 0.5 * (qp.P + qp.P.transpose());
    q = qp.q;
    A.resize(mrows, n);
    if (me > 0) A.topRows(me) = qp.A_eq;
    if (mi > 0) A.bottomRows(mi) = qp.A_ineq;
    lo.resize(mrows);
    up.resize(mrows);
    lo.head(me) = qp.b_eq;
    up.head(me) = qp.b_eq;
    lo.tail(mi).setConstant(-kInf);
    up.tail(mi) = qp.b_ineq;

    rho_bar = opts.rho;
    x = Vector::Zero(n);
    y = Vector::Zero(mrows);
    z = Vector::Zero(mrows);
    build_rho();
    factorize();
  }

  void build_rho() {
    rho_vec = Vector::Constant(mrows, rho_bar);
    rho_vec.head(me).setConstant(1e3 * rho_bar);  // stiff penalty on equalities
  }

  void factorize() {
    Matrix K = P;
    K.diagonal().array() += opts.sigma;
    if (mrows > 0) K.noalias() += A.transpose() * rho_vec.asDiagonal() * A;
    kkt.compute(K);
    if (kkt.info() != Eigen::Success) throw Error("solve_qp: KKT factorization failed");
  }

  Vector clamp(const Vector& v) const { return v.cwiseMax(lo).cwiseMin(up); }

  struct Residuals {
    double prim, dual, eps_prim, eps_dual;
  };

  Residuals residuals() const {
    Residuals r{};
    const Vector Ax = A * x;
    const Vector Px = P * x;
    const Vector Aty = (mrows > 0) ? Vector(A.transpose() * y) : Vector::Zero(n);
    r.prim = (mrows > 0) ? (Ax - z).cwiseAbs().maxCoeff() : 0.0;
    r.dual = (Px + q + Aty).cwiseAbs().maxCoeff();
    const double sp = std::max({(mrows > 0) ? Ax.cwiseAbs().maxCoeff() : 0.0,
                                (mrows > 0) ? z.cwiseAbs().maxCoeff() : 0.0, 1e-12});
    const double sd = std::max({Px.cwiseAbs().maxCoeff(), Aty.cwiseAbs().maxCoeff(),
                                q.cwiseAbs().maxCoeff(), 1e-12});
    r.eps_prim = opts.tol + opts.tol * sp;
    r.eps_dual = opts.tol + opts.tol * sd;
    return r;
  }

  bool primal_infeasibility_certificate(const Vector& dy) const {
    const double ninf = dy.cwiseAbs().maxCoeff();
    if (ninf < 1e-14) return false;
    const double eps = 1e-9 * ninf;
    if ((A.transpose() * dy).cwiseAbs().maxCoeff() > eps * std::max(1.0, A.cwiseAbs().maxCoeff()))
      return false;
    double support = 0.0;
    for (Index i = 0; i < mrows; ++i) {
      const double plus = std::max(dy[i], 0.0), minus = std::min(dy[i], 0.0);
      if (plus > 0) {
        if (!std::isfinite(up[i])) return false;
        support += up[i] * plus;
      }
      if (minus < 0) {
        if (!std::isfinite(lo[i])) return false;
        support += lo[i] * minus;
      }
    }
    return support < -eps;
  }

  bool dual_infeasibility_certificate(const Vector& dx) const {
    const double ninf = dx.cwiseAbs().maxCoeff();
    if (ninf < 1e-14) return false;
    const double eps = 1e-9 * ninf;
    if ((P * dx).cwiseAbs().maxCoeff() > eps * std::max(1.0, P.cwiseAbs().maxCoeff())) return false;
    if (q.dot(dx) >= -eps) return false;
    const Vector Adx = A * dx;
    for (Index i = 0; i < mrows; ++i) {
      if (std::isfinite(up[i]) && Adx[i] > eps) return false;
      if (std::isfinite(lo[i]) && Adx[i] < -eps) return false;
    }
    return true;
  }

  // Equality-solve on the detected active set; returns true when the
  // polished point improves the residuals.
  void polish() {
    std::vector<Index> active;
    for (Index i = 0; i < me; ++i) active.push_back(i);
    for (Index i = me; i < mrows; ++i) {
      if (y[i] > 1e-10 || z[i] > up[i] - 1e-9 * (1.0 + std::abs(up[i]))) active.push_back(i);
    }
    const Index na = static_cast<Index>(active.size());
    if (na > n) return;  // over-determined active set, keep ADMM iterate
    Matrix KKT = Matrix::Zero(n + na, n + na);
    KKT.topLeftCorner(n, n) = P;
    KKT.topLeftCorner(n, n).diagonal().array() += 1e-12;
    Vector rhs(n + na);
    rhs.head(n) = -q;
    for (Index k = 0; k < na; ++k) {
      KKT.block(n + k, 0, 1, n) = A.row(active[k]);
      KKT.block(0, n + k, n, 1) = A.row(active[k]).transpose();
      KKT(n + k, n + k) = -1e-12;
      rhs[n + k] = up[active[k]];
    }
    Eigen::LDLT<Matrix> ldlt(KKT);
    if (ldlt.info() != Eigen::Success) return;
    Vector sol = ldlt.solve(rhs);
    // one step of iterative refinement
    sol += ldlt.solve(rhs - KKT * sol);

    Vector x_p = sol.head(n);
    Vector y_p = Vector::Zero(mrows);
    for (Index k = 0; k < na; ++k) y_p[active[k]] = sol[n + k];
    const Vector z_p = clamp(A * x_p);

    // accept if feasibility does not regress and stationarity improves
    const double prim_old = (mrows > 0) ? (A * x - z).cwiseAbs().maxCoeff() : 0.0;
    const double dual_old = (P * x + q + A.transpose() * y).cwiseAbs().maxCoeff();
    const double prim_new = (mrows > 0) ? (A * x_p - z_p).cwiseAbs().maxCoeff() : 0.0;
    double viol_new = 0.0;
    for (Index i = 0; i < mrows; ++i) {
      viol_new = std::max(viol_new, (A.row(i) * x_p)(0) - up[i]);
      viol_new = std::max(viol_new, lo[i] - (A.row(i) * x_p)(0));
    }
    const double dual_new = (P * x_p + q + A.transpose() * y_p).cwiseAbs().maxCoeff();
    if (dual_new <= std::max(dual_old, 1e-12) && viol_new <= std::max(prim_old, opts.tol)) {
      x = x_p;
      y = y_p;
      z = z_p;
    }
    (void)prim_new;
  }

  SolveStatus run() {
    const auto t0 = Clock::now();
    SolveStatus st;
    if (mrows == 0) {
      // unconstrained minimum
      Eigen::LDLT<Matrix> pl(P);
      if (pl.info() != Eigen::Success || !pl.isPositive()) {
        st.status = SolveResult::Unbounded;
        return st;
      }
      x = pl.solve(-q);
      st.status = SolveResult::Optimal;
      st.x = x;
      st.objective = 0.5 * x.dot(P * x) + q.dot(x);
      st.solve_time = std::chrono::duration<double>(Clock::now() - t0).count();
      return st;
    }

    if (!have_iterate) z = clamp(A * x);
    Vector y_check = y, x_check = x;
    int it = 0;
    for (; it < opts.max_iter; ++it) {
      const Vector rhs = opts.sigma * x - q + A.transpose() * (rho_vec.cwiseProduct(z) - y);
      const Vector x_tilde = kkt.solve(rhs);
      const Vector z_tilde = A * x_tilde;
      const Vector x_new = opts.alpha * x_tilde + (1.0 - opts.alpha) * x;
      const Vector z_relax = opts.alpha * z_tilde + (1.0 - opts.alpha) * z;
      const Vector z_new = clamp(z_relax + y.cwiseQuotient(rho_vec));
      y += rho_vec.cwiseProduct(z_relax - z_new);
      x = x_new;
      z = z_new;

      if ((it + 1) % opts.check_interval == 0) {
        const Residuals r = residuals();
        if (r.prim <= r.eps_prim && r.dual <= r.eps_dual) {
          ++it;
          break;
        }
        if (primal_infeasibility_certificate(y - y_check)) {
          st.status = SolveResult::Infeasible;
          st.iterations = it + 1;
          st.solve_time = std::chrono::duration<double>(Clock::now() - t0).count();
          have_iterate = false;
          return st;
        }
        if (dual_infeasibility_certificate(x - x_check)) {
          st.status = SolveResult::Unbounded;
          st.iterations = it + 1;
          st.solve_time = std::chrono::duration<double>(Clock::now() - t0).count();
          have_iterate = false;
          return st;
        }
        y_check = y;
        x_check = x;

        // penalty adaptation
        const double ratio = std::sqrt((r.prim / std::max(r.eps_prim, 1e-16)) /
                                       std::max(r.dual / std::max(r.eps_dual, 1e-16), 1e-16));
        if (ratio > 5.0 || ratio < 0.2) {
          rho_bar = std::clamp(rho_bar * ratio, 1e-6, 1e6);
          build_rho();
          factorize();
        }
      }
    }

    const Residuals r = residuals();
    const bool converged = (r.prim <= r.eps_prim && r.dual <= r.eps_dual);
    if (converged && opts.polish) polish();
    have_iterate = true;
    st.status = converged ? SolveResult::Optimal : SolveResult::MaxIter;
    st.x = x;
    st.objective = 0.5 * x.dot(P * x) + q.dot(x);
    st.iterations = it;
    st.solve_time = std::chrono::duration<double>(Clock::now() - t0).count();
    return st;
  }
};

QpSolver::QpSolver(QuadraticProgram qp, QpOptions options)
    : impl_(std::make_unique<Impl>(std::move(qp), options)) {}
QpSolver::~QpSolver() = default;
QpSolver::QpSolver(QpSolver&&) noexcept = default;
QpSolver& QpSolver::operator=(QpSolver&&) noexcept = default;

void QpSolver::set_q(const Vector& q) {
  if (q.size() != impl_->n) throw Error("QpSolver::set_q: size mismatch");
  impl_->q = q;
}

void QpSolver::set_bounds(const Vector& b_ineq, const Vector& b_eq) {
  if (b_ineq.size() != impl_->mi || b_eq.size() != impl_->me)
    throw Error("QpSolver::set_bounds: size mismatch");
  impl_->lo.head(impl_->me) = b_eq;
  impl_->up.head(impl_->me) = b_eq;
  impl_->up.tail(impl_->mi) = b_ineq;
}

void QpSolver::warm_start(const Vector& x, const Vector& y_stacked) {
  if (x.size() != impl_->n) throw Error("QpSolver::warm_start: x size mismatch");
  impl_->x = x;
  if (y_stacked.size() == impl_->mrows)
    impl_->y = y_stacked;
  else
    impl_->y.setZero();
  impl_->z = impl_->clamp(impl_->A * x);
  impl_->have_iterate = true;
}

SolveStatus QpSolver::solve() { return impl_->run(); }

Vector QpSolver::dual() const { return impl_->y; }

SolveStatus solve_qp(const QuadraticProgram& qp, double tol, const std::optional<Vector>& warm_start) {
  QpOptions o;
  o.tol = tol;
  return solve_qp(qp, o, warm_start);
}

SolveStatus solve_qp(const QuadraticProgram& qp, const QpOptions& options,
                     const std::optional<Vector>& warm_start) {
  QpSolver solver(qp, options);
  if (warm_start) solver.warm_start(*warm_start);
  return solver.solve();
}

}  // namespace rompc::solvers
