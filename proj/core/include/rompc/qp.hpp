#pragma once

#include <memory>
#include <optional>

#include "rompc/lp.hpp"

namespace rompc::solvers {

/// Convex quadratic program
///   min 1/2 x'Px + q'x   s.t.   A_ineq x <= b_ineq,  A_eq x = b_eq,
/// with P symmetric positive semidefinite and strictly convex on the
/// feasible subspace.
struct QuadraticProgram {
  Matrix P;
  Vector q;
  Matrix A_ineq;
  Vector b_ineq;
  Matrix A_eq;
  Vector b_eq;

  Index num_vars() const { return q.size(); }
};

struct QpOptions {
  double tol = 1e-6;        // absolute and relative residual target
  int max_iter = 20000;
  bool polish = true;
  double rho = 0.1;         // initial ADMM penalty
  double sigma = 1e-6;
  double alpha = 1.6;       // over-relaxation
  int check_interval = 25;
};

/// Operator-splitting QP solver with penalty adaptation and an active-set
/// polish step. Instances keep their iterates between solves, so repeated
/// solves of the same structure (MPC steps) warm start automatically under
/// set_q / set_bounds updates.
class QpSolver {
 public:
  QpSolver(QuadraticProgram qp, QpOptions options = {});
  ~QpSolver();
  QpSolver(QpSolver&&) noexcept;
  QpSolver& operator=(QpSolver&&) noexcept;

  void set_q(const Vector& q);
  void set_bounds(const Vector& b_ineq, const Vector& b_eq);
  void warm_start(const Vector& x, const Vector& y_stacked = Vector());

  SolveStatus solve();

  /// Stacked duals (equality rows first, then inequality rows) of the last
  /// solve.
  Vector dual() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

SolveStatus solve_qp(const QuadraticProgram& qp, double tol = 1e-6,
                     const std::optional<Vector>& warm_start = std::nullopt);
SolveStatus solve_qp(const QuadraticProgram& qp, const QpOptions& options,
                     const std::optional<Vector>& warm_start = std::nullopt);

}  // namespace rompc::solvers
