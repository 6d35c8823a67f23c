#include "rompc/lp.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "rompc/log.hpp"

namespace rompc::solvers {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

double pow2_round(double s) {
  if (!(s > 0.0) || !std::isfinite(s)) return 1.0;
  return std::exp2(std::round(std::log2(s)));
}

// internal signal: the basis factorization degraded beyond use; the solve
// restarts from scratch under stricter pivoting
struct BasisDegraded {};
}  // namespace

const char* to_string(SolveResult r) {
  switch (r) {
    case SolveResult::Optimal: return "optimal";
    case SolveResult::Infeasible: return "infeasible";
    case SolveResult::Unbounded: return "unbounded";
    default: return "max_iter";
  }
}

struct RevisedSimplex::Impl {
  using Clock = std::chrono::steady_clock;

  Eigen::SparseMatrix<double> M;  // scaled, column-major
  Vector d;                       // scaled rhs
  Vector gamma;                   // scaled structural costs
  Vector row_scale, col_scale;
  LpOptions opts;

  Index nr = 0, nc = 0;
  std::vector<Index> basic;      // size nr, column ids; id >= nc is artificial id-nc
  std::vector<char> in_basis;    // size nc + nr
  std::vector<double> art_sign;  // fixed sign of each artificial column
  Vector w_basic;                // current basic values (scaled)
  Vector cost;                   // current costs over nc+nr columns (scaled)
  double penalty = 0.0;          // phase-2 cost on artificials

  Eigen::PartialPivLU<Matrix> lu;
  std::vector<std::pair<Index, Vector>> etas;
  long pivots_since_refactor = 0;
  int refactor_interval = 64;

  long iterations = 0;
  long degen_streak = 0;
  bool bland = false;
  int strict_level = 0;  // escalated after basis degradation
  Index section_cursor = 0;
  bool have_optimal_basis = false;

  Impl(Eigen::SparseMatrix<double> M_in, Vector d_in, Vector gamma_in, LpOptions o)
      : M(std::move(M_in)), d(std::move(d_in)), gamma(std::move(gamma_in)), opts(o) {
    nr = M.rows();
    nc = M.cols();
    if (d.size() != nr) throw Error("RevisedSimplex: rhs size mismatch");
    if (gamma.size() != nc) throw Error("RevisedSimplex: cost size mismatch");
    refactor_interval = opts.refactor_interval;
    M.makeCompressed();
    scale();
    penalty = 1e7 * (1.0 + gamma.cwiseAbs().maxCoeff());
  }

  void scale() {
    row_scale = Vector::Ones(nr);
    col_scale = Vector::Ones(nc);
    if (nr == 0 || nc == 0 || M.nonZeros() == 0) return;
    Vector rmax = Vector::Zero(nr);
    for (Index j = 0; j < nc; ++j)
      for (Eigen::SparseMatrix<double>::InnerIterator it(M, j); it; ++it)
        rmax[it.row()] = std::max(rmax[it.row()], std::abs(it.value()));
    for (Index r = 0; r < nr; ++r)
      row_scale[r] = pow2_round(rmax[r] > 0 ? 1.0 / rmax[r] : 1.0);
    for (Index j = 0; j < nc; ++j) {
      double cmax = 0.0;
      for (Eigen::SparseMatrix<double>::InnerIterator it(M, j); it; ++it)
        cmax = std::max(cmax, std::abs(it.value()) * row_scale[it.row()]);
      col_scale[j] = pow2_round(cmax > 0 ? 1.0 / cmax : 1.0);
    }
    for (Index j = 0; j < nc; ++j)
      for (Eigen::SparseMatrix<double>::InnerIterator it(M, j); it; ++it)
        it.valueRef() *= row_scale[it.row()] * col_scale[j];
    d.array() *= row_scale.array();
    gamma.array() *= col_scale.array();
  }

  bool is_artificial(Index col) const { return col >= nc; }

  double col_dot(Index col, const Vector& v) const {
    if (is_artificial(col)) return art_sign[col - nc] * v[col - nc];
    double s = 0.0;
    for (Eigen::SparseMatrix<double>::InnerIterator it(M, col); it; ++it)
      s += it.value() * v[it.row()];
    return s;
  }

  void scatter_col(Index col, Vector& v) const {
    v.setZero();
    if (is_artificial(col)) {
      v[col - nc] = art_sign[col - nc];
      return;
    }
    for (Eigen::SparseMatrix<double>::InnerIterator it(M, col); it; ++it)
      v[it.row()] = it.value();
  }

  void refactor() {
    Matrix B = Matrix::Zero(nr, nr);
    for (Index r = 0; r < nr; ++r) {
      const Index col = basic[r];
      if (is_artificial(col)) {
        B(col - nc, r) = art_sign[col - nc];
      } else {
        for (Eigen::SparseMatrix<double>::InnerIterator it(M, col); it; ++it)
          B(it.row(), r) = it.value();
      }
    }
    lu.compute(B);
    const Vector diag = lu.matrixLU().diagonal().cwiseAbs();
    const double dmax = diag.maxCoeff();
    if (!(dmax > 0.0) || diag.minCoeff() < 1e-13 * dmax) throw BasisDegraded{};
    etas.clear();
    pivots_since_refactor = 0;
    w_basic = ftran_fresh(d);
    if (!w_basic.allFinite()) throw BasisDegraded{};
  }

  Vector ftran_fresh(const Vector& v) const {
    Vector x = lu.solve(v);
    for (const auto& [r, y] : etas) {
      const double t = x[r] / y[r];
      x -= t * y;
      x[r] = t;
    }
    return x;
  }

  void btran_inplace(Vector& v) const {
    for (auto it = etas.rbegin(); it != etas.rend(); ++it) {
      const auto& [r, y] = *it;
      v[r] = (v[r] - y.dot(v) + y[r] * v[r]) / y[r];
    }
    v = lu.transpose().solve(v);
  }

  Vector current_pi() const {
    Vector cb(nr);
    for (Index r = 0; r < nr; ++r) cb[r] = cost[basic[r]];
    btran_inplace(cb);
    return cb;
  }

  // Partial (sectional) pricing over structural columns. Returns the
  // entering column or -1 when no reduced cost is below -tol anywhere.
  Index price(const Vector& pi) {
    const double tol = opts.tol;
    if (bland) {
      for (Index j = 0; j < nc; ++j) {
        if (in_basis[j]) continue;
        if (cost[j] - col_dot(j, pi) < -tol) return j;
      }
      return -1;
    }
    const Index section = std::max<Index>(512, nc / 16);
    Index scanned = 0;
    Index start = section_cursor;
    double best_val = -tol;
    Index best_j = -1;
    while (scanned < nc) {
      const Index end = std::min<Index>(start + section, nc);
      for (Index j = start; j < end; ++j) {
        if (in_basis[j]) continue;
        const double dj = cost[j] - col_dot(j, pi);
        if (dj < best_val) {
          best_val = dj;
          best_j = j;
        }
      }
      scanned += end - start;
      start = (end >= nc) ? 0 : end;
      if (best_j >= 0) {
        section_cursor = start;
        return best_j;
      }
    }
    return -1;
  }

  struct RatioOutcome {
    Index leave_pos = -1;  // -1 means no blocking row (unbounded direction)
    double theta = 0.0;
  };

  RatioOutcome ratio_test(const Vector& yhat) const {
    const double piv_tol = 1e-9;
    double theta_min = kInf;
    for (Index i = 0; i < nr; ++i) {
      if (yhat[i] > piv_tol) theta_min = std::min(theta_min, std::max(w_basic[i], 0.0) / yhat[i]);
    }
    if (!std::isfinite(theta_min)) return {};
    // among near-ties prefer the largest pivot element
    RatioOutcome out;
    out.theta = theta_min;
    double best_piv = 0.0;
    for (Index i = 0; i < nr; ++i) {
      if (yhat[i] <= piv_tol) continue;
      const double theta_i = std::max(w_basic[i], 0.0) / yhat[i];
      if (theta_i <= theta_min + opts.tol / yhat[i] && yhat[i] > best_piv) {
        best_piv = yhat[i];
        out.leave_pos = i;
      }
    }
    if (out.leave_pos < 0) return {};
    return out;
  }

  void pivot(Index entering, Index leave_pos, const Vector& yhat, double theta) {
    w_basic -= theta * yhat;
    w_basic[leave_pos] = theta;
    in_basis[basic[leave_pos]] = 0;
    in_basis[entering] = 1;
    basic[leave_pos] = entering;
    etas.emplace_back(leave_pos, yhat);
    ++pivots_since_refactor;
    ++iterations;
    if (theta <= opts.tol) {
      if (++degen_streak > opts.degenerate_cap && !bland) {
        bland = true;
        log::debug("simplex: switching to Bland's rule after a degenerate streak");
      }
    } else {
      degen_streak = 0;
      if (strict_level == 0) bland = false;
    }
    if (pivots_since_refactor >= refactor_interval) refactor();
  }

  // Primal simplex with the current cost vector. Assumes w_basic >= 0.
  SolveResult primal_loop() {
    Vector yhat(nr);
    int stall = 0;  // consecutive refactor-retries without a pivot
    while (iterations < opts.max_iter) {
      const Vector pi = current_pi();
      if (!pi.allFinite()) {
        if (etas.empty()) throw BasisDegraded{};
        refactor();
        continue;
      }
      const Index q = price(pi);
      if (q < 0) return SolveResult::Optimal;
      scatter_col(q, yhat);
      yhat = ftran_fresh(yhat);
      // guard the eta chain: rebuild the factorization when the transformed
      // column degrades
      if (!yhat.allFinite() || yhat.cwiseAbs().maxCoeff() > 1e10) {
        if (!etas.empty() && stall < 4) {
          ++stall;
          refactor();
          continue;
        }
        if (!yhat.allFinite()) throw BasisDegraded{};
      }
      const RatioOutcome ro = ratio_test(yhat);
      if (ro.leave_pos < 0) {
        if (!etas.empty() && stall < 4) {  // only trust unboundedness when fresh
          ++stall;
          refactor();
          continue;
        }
        return SolveResult::Unbounded;
      }
      if (std::abs(yhat[ro.leave_pos]) < 1e-7 * yhat.cwiseAbs().maxCoeff() && !etas.empty() &&
          stall < 4) {
        ++stall;
        refactor();
        continue;
      }
      stall = 0;
      pivot(q, ro.leave_pos, yhat, ro.theta);
    }
    return SolveResult::MaxIter;
  }

  void setup_initial_basis() {
    basic.assign(nr, -1);
    in_basis.assign(nc + nr, 0);
    art_sign.assign(nr, 1.0);
    for (Index r = 0; r < nr; ++r) art_sign[r] = (d[r] >= 0.0) ? 1.0 : -1.0;

    // crash: cover rows with singleton structural columns where the basic
    // value comes out nonnegative
    std::vector<double> best_val(nr, 0.0);
    std::vector<Index> best_col(nr, -1);
    for (Index j = 0; j < nc; ++j) {
      Eigen::SparseMatrix<double>::InnerIterator it(M, j);
      if (!it) continue;
      const Index r = it.row();
      const double v = it.value();
      ++it;
      if (it) continue;  // more than one nonzero
      if (d[r] / v < -opts.tol) continue;
      if (std::abs(v) > std::abs(best_val[r])) {
        best_val[r] = v;
        best_col[r] = j;
      }
    }
    for (Index r = 0; r < nr; ++r) {
      if (best_col[r] >= 0) {
        basic[r] = best_col[r];
        in_basis[best_col[r]] = 1;
      } else {
        basic[r] = nc + r;
        in_basis[nc + r] = 1;
      }
    }
    refactor();
  }

  bool any_basic_artificial() const {
    for (Index r = 0; r < nr; ++r)
      if (is_artificial(basic[r])) return true;
    return false;
  }

  double artificial_level() const {
    double s = 0.0;
    for (Index r = 0; r < nr; ++r)
      if (is_artificial(basic[r])) s += std::abs(w_basic[r]);
    return s;
  }

  // after phase 1, pivot zero-level artificials out where a structural
  // column has a usable pivot element in their row
  void drive_out_artificials() {
    Vector z(nr), yhat(nr);
    for (Index pos = 0; pos < nr; ++pos) {
      if (!is_artificial(basic[pos])) continue;
      if (std::abs(w_basic[pos]) > opts.tol) continue;
      z.setZero();
      z[pos] = 1.0;
      btran_inplace(z);
      Index best_j = -1;
      double best_a = 1e-7;
      for (Index j = 0; j < nc; ++j) {
        if (in_basis[j]) continue;
        const double a = std::abs(col_dot(j, z));
        if (a > best_a) {
          best_a = a;
          best_j = j;
        }
      }
      if (best_j < 0) continue;  // dependent row, the penalty keeps it parked
      scatter_col(best_j, yhat);
      yhat = ftran_fresh(yhat);
      pivot(best_j, pos, yhat, 0.0);
    }
  }

  void set_phase2_costs() {
    cost.resize(nc + nr);
    cost.head(nc) = gamma;
    cost.tail(nr).setConstant(penalty);
  }

  SolveStatus finish(SolveResult result, Clock::time_point t0) {
    SolveStatus st;
    st.status = result;
    st.iterations = static_cast<int>(iterations);
    if (result == SolveResult::Optimal || result == SolveResult::MaxIter) {
      if (artificial_level() > 1e-6 * (1.0 + d.cwiseAbs().maxCoeff()) &&
          result == SolveResult::Optimal) {
        log::warn("simplex: residual artificial level, reporting infeasible");
        st.status = SolveResult::Infeasible;
      } else {
        Vector w = Vector::Zero(nc);
        for (Index r = 0; r < nr; ++r)
          if (!is_artificial(basic[r])) w[basic[r]] = w_basic[r];
        w.array() *= col_scale.array();  // back to original variable scale
        st.objective = 0.0;
        for (Index j = 0; j < nc; ++j) st.objective += (gamma[j] / col_scale[j]) * w[j];
        st.x = std::move(w);
      }
    }
    have_optimal_basis = (st.status == SolveResult::Optimal);
    st.solve_time = std::chrono::duration<double>(Clock::now() - t0).count();
    return st;
  }

  SolveStatus run_cold() {
    const auto t0 = Clock::now();
    for (;;) {
      try {
        return run_cold_once(t0);
      } catch (const BasisDegraded&) {
        ++strict_level;
        if (strict_level > 2)
          throw Error("simplex: basis factorization kept degenerating; the program is "
                      "numerically singular");
        refactor_interval = (strict_level == 1) ? 16 : 4;
        bland = true;
        log::debug("simplex: basis degraded, restarting under stricter pivoting (level " +
                   std::to_string(strict_level) + ")");
      }
    }
  }

  SolveStatus run_cold_once(Clock::time_point t0) {
    iterations = 0;
    degen_streak = 0;
    if (strict_level == 0) bland = false;
    have_optimal_basis = false;
    if (nr == 0) {
      SolveStatus st;
      basic.clear();
      in_basis.assign(nc, 0);
      w_basic.resize(0);
      for (Index j = 0; j < nc; ++j)
        if (gamma[j] < -opts.tol) {
          st.status = SolveResult::Unbounded;
          return st;
        }
      st.status = SolveResult::Optimal;
      st.x = Vector::Zero(nc);
      st.objective = 0.0;
      have_optimal_basis = true;
      return st;
    }

    setup_initial_basis();

    if (any_basic_artificial()) {
      // phase 1: minimize the total artificial level
      cost = Vector::Zero(nc + nr);
      cost.tail(nr).setConstant(1.0);
      const SolveResult r1 = primal_loop();
      if (r1 == SolveResult::MaxIter) return finish(SolveResult::MaxIter, t0);
      if (artificial_level() > opts.tol * (1.0 + d.cwiseAbs().sum()))
        return finish(SolveResult::Infeasible, t0);
      drive_out_artificials();
    }

    set_phase2_costs();
    const SolveResult r2 = primal_loop();
    return finish(r2, t0);
  }

  // Dual simplex from the previous optimal basis after the rhs changed.
  SolveStatus run_dual(const Vector& d_new_unscaled) {
    const auto t0 = Clock::now();
    d = d_new_unscaled;
    d.array() *= row_scale.array();
    // dual simplex never prices artificials back in, so a basis still
    // holding one cannot be reused safely under a new rhs
    if (!have_optimal_basis || any_basic_artificial()) return run_cold();

    iterations = 0;
    degen_streak = 0;
    try {
      refactor();  // also refreshes w_basic for the new rhs
    } catch (const BasisDegraded&) {
      return run_cold();
    }
    set_phase2_costs();

    Vector pi = current_pi();
    Vector dbar(nc);
    for (Index j = 0; j < nc; ++j)
      dbar[j] = in_basis[j] ? 0.0 : cost[j] - col_dot(j, pi);

    Vector z(nr), alpha(nc), yhat(nr);
    long dual_degen = 0;
    while (iterations < opts.max_iter) {
      // leaving row: most negative basic value, at a scale-aware threshold
      const double feas_thr = -opts.tol * (1.0 + w_basic.cwiseAbs().maxCoeff());
      Index leave_pos = -1;
      double most_neg = feas_thr;
      for (Index i = 0; i < nr; ++i) {
        if (w_basic[i] < most_neg) {
          most_neg = w_basic[i];
          leave_pos = i;
        }
      }
      if (leave_pos < 0) return finish(SolveResult::Optimal, t0);

      z.setZero();
      z[leave_pos] = 1.0;
      btran_inplace(z);

      // alpha_j = (B^-1 a_j)_leave over structural nonbasic columns
      Index q = -1;
      double best_ratio = kInf;
      double best_piv = 0.0;
      const bool bland_now = dual_degen > opts.degenerate_cap;
      for (Index j = 0; j < nc; ++j) {
        if (in_basis[j]) continue;
        const double a = col_dot(j, z);
        alpha[j] = a;
        if (a >= -1e-9) continue;
        const double ratio = dbar[j] / (-a);
        if (bland_now) {
          if (q < 0) q = j;
        } else if (ratio < best_ratio - 1e-12 ||
                   (ratio < best_ratio + 1e-12 && std::abs(a) > best_piv)) {
          best_ratio = ratio;
          best_piv = std::abs(a);
          q = j;
        }
      }
      if (q < 0) {
        // rule out stale factors before concluding anything; the cold solver
        // gets the final word
        if (!etas.empty()) {
          try {
            refactor();
          } catch (const BasisDegraded&) {
            return run_cold();
          }
          pi = current_pi();
          for (Index j = 0; j < nc; ++j)
            dbar[j] = in_basis[j] ? 0.0 : cost[j] - col_dot(j, pi);
          continue;
        }
        log::debug("simplex: dual iteration found no pivot, re-solving cold");
        return run_cold();
      }

      scatter_col(q, yhat);
      yhat = ftran_fresh(yhat);
      const double piv = yhat[leave_pos];
      if (std::abs(piv) < 1e-11 || !yhat.allFinite()) {
        if (!etas.empty()) {
          try {
            refactor();
          } catch (const BasisDegraded&) {
            return run_cold();
          }
          continue;
        }
        log::debug("simplex: dual pivot breakdown, falling back to a cold solve");
        return run_cold();
      }
      const double theta_d = dbar[q] / (-alpha[q]);
      if (theta_d <= opts.tol) ++dual_degen; else dual_degen = 0;

      for (Index j = 0; j < nc; ++j) {
        if (in_basis[j]) continue;
        dbar[j] += theta_d * alpha[j];
      }
      const Index leaving_col = basic[leave_pos];
      const double t_enter = w_basic[leave_pos] / piv;
      w_basic -= t_enter * yhat;
      w_basic[leave_pos] = t_enter;
      in_basis[leaving_col] = 0;
      in_basis[q] = 1;
      basic[leave_pos] = q;
      if (!is_artificial(leaving_col)) dbar[leaving_col] = theta_d;
      dbar[q] = 0.0;
      etas.emplace_back(leave_pos, yhat);
      ++pivots_since_refactor;
      ++iterations;
      if (pivots_since_refactor >= refactor_interval) {
        try {
          refactor();
        } catch (const BasisDegraded&) {
          return run_cold();
        }
      }
    }
    return finish(SolveResult::MaxIter, t0);
  }

  Vector multipliers_unscaled() const {
    Vector pi = current_pi();
    pi.array() *= row_scale.array();
    return pi;
  }
};

RevisedSimplex::RevisedSimplex(Eigen::SparseMatrix<double> M, Vector d, Vector gamma,
                               LpOptions options)
    : impl_(std::make_unique<Impl>(std::move(M), std::move(d), std::move(gamma), options)) {}

RevisedSimplex::~RevisedSimplex() = default;
RevisedSimplex::RevisedSimplex(RevisedSimplex&&) noexcept = default;
RevisedSimplex& RevisedSimplex::operator=(RevisedSimplex&&) noexcept = default;

SolveStatus RevisedSimplex::solve() { return impl_->run_cold(); }

SolveStatus RevisedSimplex::resolve_with_rhs(const Vector& d) {
  if (d.size() != impl_->nr) throw Error("resolve_with_rhs: rhs size mismatch");
  return impl_->run_dual(d);
}

Vector RevisedSimplex::multipliers() const { return impl_->multipliers_unscaled(); }

SolveStatus solve_lp(const LinearProgram& lp, double tol) {
  LpOptions o;
  o.tol = tol;
  return solve_lp(lp, o);
}

SolveStatus solve_lp(const LinearProgram& lp, const LpOptions& options) {
  const Index n = lp.num_vars();
  if (lp.A_ineq.size() > 0 && lp.A_ineq.cols() != n) throw Error("solve_lp: A_ineq column mismatch");
  if (lp.A_eq.size() > 0 && lp.A_eq.cols() != n) throw Error("solve_lp: A_eq column mismatch");
  if (lp.A_ineq.rows() != lp.b_ineq.size()) throw Error("solve_lp: b_ineq size mismatch");
  if (lp.A_eq.rows() != lp.b_eq.size()) throw Error("solve_lp: b_eq size mismatch");
  if (!lp.c.allFinite()) throw Error("solve_lp: non-finite objective");

  std::vector<std::pair<Index, double>> ub_rows, lb_rows;
  if (lp.ub.size() > 0) {
    if (lp.ub.size() != n) throw Error("solve_lp: ub size mismatch");
    for (Index i = 0; i < n; ++i)
      if (std::isfinite(lp.ub[i])) ub_rows.emplace_back(i, lp.ub[i]);
  }
  if (lp.lb.size() > 0) {
    if (lp.lb.size() != n) throw Error("solve_lp: lb size mismatch");
    for (Index i = 0; i < n; ++i)
      if (std::isfinite(lp.lb[i])) lb_rows.emplace_back(i, lp.lb[i]);
  }

  const Index mi = lp.A_ineq.rows();
  const Index me = lp.A_eq.rows();
  const Index n_ineq = mi + static_cast<Index>(ub_rows.size() + lb_rows.size());
  const Index nrows = n_ineq + me;
  const Index ncols = 2 * n + n_ineq;  // x+, x-, slacks

  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<std::size_t>((mi + me) * n + 3 * n_ineq));
  Vector d(nrows);
  auto add_var_coeffs = [&](Index row, const auto& rowvec) {
    for (Index j = 0; j < n; ++j) {
      const double v = rowvec[j];
      if (v != 0.0) {
        trips.emplace_back(row, j, v);
        trips.emplace_back(row, n + j, -v);
      }
    }
  };
  Index row = 0;
  for (Index i = 0; i < mi; ++i, ++row) {
    add_var_coeffs(row, lp.A_ineq.row(i));
    trips.emplace_back(row, 2 * n + row, 1.0);
    d[row] = lp.b_ineq[i];
  }
  for (const auto& [j, ub] : ub_rows) {
    trips.emplace_back(row, j, 1.0);
    trips.emplace_back(row, n + j, -1.0);
    trips.emplace_back(row, 2 * n + row, 1.0);
    d[row] = ub;
    ++row;
  }
  for (const auto& [j, lb] : lb_rows) {
    trips.emplace_back(row, j, -1.0);
    trips.emplace_back(row, n + j, 1.0);
    trips.emplace_back(row, 2 * n + row, 1.0);
    d[row] = -lb;
    ++row;
  }
  for (Index i = 0; i < me; ++i, ++row) {
    add_var_coeffs(row, lp.A_eq.row(i));
    d[row] = lp.b_eq[i];
  }

  Eigen::SparseMatrix<double> M(nrows, ncols);
  M.setFromTriplets(trips.begin(), trips.end());
  Vector gamma = Vector::Zero(ncols);
  gamma.head(n) = -lp.c;
  gamma.segment(n, n) = lp.c;

  RevisedSimplex simplex(std::move(M), std::move(d), std::move(gamma), options);
  SolveStatus st = simplex.solve();
  if (st.x.size() > 0) {
    Vector x = st.x.head(n) - st.x.segment(n, n);
    st.x = std::move(x);
    st.objective = -st.objective;  // the computational form minimizes -c'x
  }
  return st;
}

}  // namespace rompc::solvers
