#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <complex>

#include "rompc/state_space.hpp"

namespace rompc::linalg {

using SparseMatrix = Eigen::SparseMatrix<double>;

/// Thrown when an iterative eigenvalue computation does not converge within
/// its iteration cap. Carries the best estimate obtained so far.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& msg, double best)
      : Error(msg), best_estimate_(best) {}
  double best_estimate() const { return best_estimate_; }

 private:
  double best_estimate_;
};

/// Largest eigenvalue magnitude of a square matrix (dense path, exact QR
/// iteration via Eigen).
double spectral_radius(const Matrix& A);

struct ArnoldiOptions {
  double tol = 1e-10;    // relative residual on the dominant Ritz pair
  int krylov_dim = 40;   // subspace size per restart
  int max_restarts = 300;
};

/// Largest eigenvalue magnitude of a large sparse matrix via restarted
/// Arnoldi iteration. Throws ConvergenceError (carrying the best estimate)
/// if the residual target is not met within the restart cap.
double spectral_radius(const SparseMatrix& A, const ArnoldiOptions& opts = {});

/// Solves the discrete Lyapunov equation  A' G A - G + Q = 0  for symmetric Q.
/// Requires rho(A) < 1. Residual contract: |A'GA - G + Q|_F <= 1e-9 (1+|Q|_F).
Matrix solve_dlyap(const Matrix& A, const Matrix& Q);

/// Solves the continuous Lyapunov equation  A' G + G A + Q = 0.
/// Requires Re(lambda(A)) < 0.
Matrix solve_clyap(const Matrix& A, const Matrix& Q);

/// Stabilizing solution of the discrete algebraic Riccati equation
///   X = A'XA - A'XB (B'XB + R)^-1 B'XA + Q.
/// Structure-preserving doubling with a fixed-point refinement pass.
/// Requires (A,B) stabilizable, R > 0, Q >= 0.
Matrix solve_dare(const Matrix& A, const Matrix& B, const Matrix& Q, const Matrix& R);

/// Stabilizing solution of the continuous algebraic Riccati equation
///   A'X + XA - XB R^-1 B'X + Q = 0.
/// Matrix-sign iteration on the Hamiltonian plus Newton refinement.
Matrix solve_care(const Matrix& A, const Matrix& B, const Matrix& Q, const Matrix& R);

/// e^{A t} by scaling-and-squaring.
Matrix matrix_exponential(const Matrix& A, double t = 1.0);

/// H2 norm of the system (A, B_in, C_out): sqrt(trace(C P C')) with P the
/// controllability Gramian. Throws Error for unstable A.
double h2_norm(const Matrix& A, const Matrix& B_in, const Matrix& C_out, TimeDomain td);

/// H2 norm of the u -> z channel of a model.
double h2_norm(const StateSpaceModel& sys);

struct EigenInfo {
  Eigen::VectorXcd eigenvalues;
  bool diagonalizable = false;
  Eigen::MatrixXcd T;      // eigenvector matrix (when diagonalizable)
  Eigen::MatrixXcd T_inv;
  double condition = 0.0;  // cond_2(T)
};

/// Eigenvalue decomposition with a diagonalizability estimate. The flag is
/// cleared when cond_2(T) exceeds cond_cap.
EigenInfo eigen_info(const Matrix& A, double cond_cap = 1e12);

struct SpectralSplit {
  Matrix V_s, W_s;  // stable invariant subspace basis pair, W_s' V_s = I
  Matrix V_u, W_u;  // unstable counterpart (zero columns when empty)
  Eigen::VectorXcd spectrum_s;
  Eigen::VectorXcd spectrum_u;
};

/// Splits R^n into the A-invariant stable/unstable subspaces. "Stable" means
/// |lambda| < 1 (discrete) or Re lambda < 0 (continuous). Eigenvalues within
/// marginal_tol of the boundary are rejected with an error naming them.
SpectralSplit spectral_split(const Matrix& A, TimeDomain td, double marginal_tol = 1e-8);

}  // namespace rompc::linalg
