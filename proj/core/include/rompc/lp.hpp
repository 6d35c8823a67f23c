#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <memory>
#include <vector>

#include "rompc/state_space.hpp"

namespace rompc::solvers {

enum class SolveResult { Optimal, Infeasible, Unbounded, MaxIter };

const char* to_string(SolveResult r);

struct SolveStatus {
  SolveResult status = SolveResult::MaxIter;
  double objective = 0.0;
  Vector x;             // present for Optimal and MaxIter
  int iterations = 0;
  double solve_time = 0.0;  // seconds
};

/// Linear program in inequality form:  maximize c'x  subject to
/// A_ineq x <= b_ineq, A_eq x = b_eq, lb <= x <= ub (bounds optional,
/// +-infinity entries allowed). Variables are free by default.
struct LinearProgram {
  Vector c;
  Matrix A_ineq;
  Vector b_ineq;
  Matrix A_eq;
  Vector b_eq;
  Vector lb, ub;  // empty or size of c

  Index num_vars() const { return c.size(); }
};

struct LpOptions {
  double tol = 1e-9;
  long max_iter = 100000;   // pivot cap
  int refactor_interval = 64;
  long degenerate_cap = 1000;  // Bland's rule after this many stalled pivots
};

/// Revised simplex on the computational form
///   min gamma' w   s.t.   M w = d,   w >= 0,
/// with a dense LU basis factorization, product-form eta updates, partial
/// pricing and Bland's rule anti-cycling fallback. After an Optimal solve the
/// instance can be re-solved for a new right-hand side d via dual simplex
/// pivots from the previous optimal basis (resolve_with_rhs), which is how
/// families of related programs share work.
class RevisedSimplex {
 public:
  RevisedSimplex(Eigen::SparseMatrix<double> M, Vector d, Vector gamma,
                 LpOptions options = {});
  ~RevisedSimplex();
  RevisedSimplex(RevisedSimplex&&) noexcept;
  RevisedSimplex& operator=(RevisedSimplex&&) noexcept;

  SolveStatus solve();
  SolveStatus resolve_with_rhs(const Vector& d);

  /// Simplex multipliers pi (unscaled) of the last Optimal solve. For a
  /// program built as the dual of  max c'x s.t. Ax <= b,  these are the
  /// optimal primal variables x.
  Vector multipliers() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Solves a general LP by reduction to computational form (free variables
/// split, slacks added). Detects infeasible and unbounded programs.
SolveStatus solve_lp(const LinearProgram& lp, double tol = 1e-9);
SolveStatus solve_lp(const LinearProgram& lp, const LpOptions& options);

}  // namespace rompc::solvers
