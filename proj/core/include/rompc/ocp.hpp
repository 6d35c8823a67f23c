#pragma once

#include <memory>
#include <optional>

#include "rompc/polytope.hpp"
#include "rompc/qp.hpp"
#include "rompc/state_space.hpp"

namespace rompc::ocp {

using geometry::Polytope;

/// Finite-horizon constrained problem for the simulated reduced model:
///   min |dx_N|_P^2 + sum |dx_i|_Q^2 + |du_i|_R^2
///   s.t. x+ = Ax + Bu,  H x in Zbar,  u in Ubar,  x_N in Xf,
/// around the steady target (x_target, u_target), dx = x - x_target.
struct OcpSpec {
  StateSpaceModel rom;  // discrete
  Polytope Zbar;
  Polytope Ubar;
  Matrix Q, R, P;
  Polytope Xf;
  int N = 10;
  Vector x_target;  // defaults to the origin
  Vector u_target;
  double qp_tol = 1e-8;

  void validate() const;
};

struct TerminalIngredients {
  Matrix P;    // terminal cost, from the unconstrained Riccati solution
  Matrix Kf;   // associated terminal feedback
  Polytope Xf; // maximal constraint-admissible invariant set (absolute coords)
  int iterations = 0;  // determination index of the backward recursion
};

/// Terminal cost and maximal positively invariant terminal set of
/// x+ = (A + B Kf)(x - x_t) + x_t under H x in Zbar, u_t + Kf (x - x_t) in
/// Ubar, by the standard backward recursion (new faces kept only when not
/// redundant). Throws when the recursion exceeds `max_iter` or the target is
/// outside the tightened sets.
TerminalIngredients terminal_ingredients(const StateSpaceModel& rom, const Matrix& Q,
                                         const Matrix& R, const Polytope& Zbar,
                                         const Polytope& Ubar, const Vector& x_target,
                                         const Vector& u_target, int max_iter = 500);

/// Condensed QP over the stacked control moves; states eliminated through
/// the dynamics.
solvers::QuadraticProgram build_qp(const OcpSpec& spec, const Vector& x0);

struct OcpSolution {
  Vector u0;                  // first optimal control
  Matrix predicted_states;    // n x (N+1)
  Matrix predicted_controls;  // m x N
  double cost = 0.0;          // full stage cost, constant term included
  solvers::SolveStatus status;
};

/// Receding-horizon solver with shift warm starting across calls.
class OcpSolver {
 public:
  explicit OcpSolver(OcpSpec spec);
  ~OcpSolver();
  OcpSolver(OcpSolver&&) noexcept;

  OcpSolution solve(const Vector& x0);
  /// Seeds the next solve with an explicit stacked control sequence.
  void warm_start_controls(const Vector& u_stacked);
  const OcpSpec& spec() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

OcpSolution solve_ocp(const OcpSpec& spec, const Vector& x0,
                      const std::optional<Vector>& warm_controls = std::nullopt);

}  // namespace rompc::ocp
