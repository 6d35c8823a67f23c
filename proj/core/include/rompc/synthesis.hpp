#pragma once

#include <optional>

#include "rompc/linalg.hpp"
#include "rompc/reduction.hpp"
#include "rompc/state_space.hpp"

namespace rompc::synthesis {

/// Closed-loop error dynamics of the plant driven to track the simulated
/// reduced model:
///
///   eps+ = A_eps eps + B_eps r + G_eps w,    eps = [e; d],
///   r = [xbar; ubar],  w = [w_process; v_measurement],
///
/// with blocks
///   A_eps = [ Af      Bf K          ]   B_eps = [ Pperp Af V   Pperp Bf ]
///           [ L Cf    A + BK - LC   ]           [ 0            0        ]
///   G_eps = [ Bfw  0 ]                 B_xi  = [ -Bf K   Bf ]
///           [ 0    L ]                         [ -B  K   B  ]
///
/// and the tracking-error output rows E_z = [Hz Hf, 0], E_u = [0, Hu K].
/// B_xi drives the same A_eps as the combined plant/estimator state
/// [xf; xhat] recursion used by the simulator.
struct ErrorSystem {
  Eigen::SparseMatrix<double> A_eps;
  Matrix B_eps;   // (nf+n) x (n+m)
  Matrix G_eps;   // (nf+n) x (mw+p)
  Matrix B_xi;    // (nf+n) x (n+m)
  Matrix E_z;     // n_z x (nf+n)
  Matrix E_u;     // n_u x (nf+n)

  Index nf = 0, n = 0, m = 0, mw = 0, p = 0;
  TimeDomain time_domain = TimeDomain::Discrete;
  double dt = 0.0;

  // kept for closed-loop norm evaluation and diagnostics
  Matrix K, L, Hf;

  Matrix dense_A() const { return Matrix(A_eps); }
  Index dim() const { return nf + n; }
};

ErrorSystem assemble_error_system(const StateSpaceModel& fom, const StateSpaceModel& rom,
                                  const reduction::ProjectionBasis& basis, const Matrix& K,
                                  const Matrix& L, const Matrix& Hz, const Matrix& Hu);

struct GainPair {
  Matrix K;  // m x n
  Matrix L;  // n x p
  double rho_Aeps = 0.0;
  std::optional<double> h2_reduced;  // closed-loop norm of the reduced error loop
  bool accepted = false;             // rho_Aeps < 1
};

/// Reduced-order Riccati gain synthesis: solves the two reduced algebraic
/// Riccati equations with weights R = Wu'Wu, Q_z = H'Wz'WzH,
/// Q_w = Bw Bw' + gamma I, forms K and L, and verifies Schur stability of
/// the assembled full error dynamics a posteriori. `accepted` reports the
/// outcome; it is never silently ignored.
GainPair riccati_gains(const StateSpaceModel& fom, const StateSpaceModel& rom,
                       const reduction::ProjectionBasis& basis, const Matrix& Wz,
                       const Matrix& Wu, double gamma_reg, const Matrix& Hz, const Matrix& Hu);

/// Exact H2 norm of the closed-loop error system with inputs [r; w] and the
/// weighted tracking-error outputs [Wz Hf e; Wu K d]. Requires a stable
/// A_eps and a dense-solvable dimension.
double closed_loop_h2(const ErrorSystem& err, const Matrix& Wz, const Matrix& Wu);

/// Spectral radius of A_eps, dense below 512 states, sparse Arnoldi above.
double error_system_spectral_radius(const ErrorSystem& err);

}  // namespace rompc::synthesis
