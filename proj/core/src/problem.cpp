#include "rompc/problem.hpp"

#include <Eigen/Cholesky>

#include "rompc/log.hpp"

namespace rompc {

void ProblemSpec::validate() const {
  fom.validate();
  if (Z.dim() != fom.o()) throw Error("problem: Z dimension mismatch with the performance output");
  if (U.dim() != fom.m()) throw Error("problem: U dimension mismatch with the control input");
  if (fom.mw() > 0 && W.dim() != fom.mw()) throw Error("problem: W dimension mismatch");
  if (V.dim() != fom.p()) throw Error("problem: V dimension mismatch with the measurement");
  Z.validate();
  U.validate();
  V.validate();
  if (fom.mw() > 0) W.validate();

  auto check_set = [](const Polytope& S, const char* name) {
    if (!geometry::contains(S, Vector::Zero(S.dim()), 1e-12))
      throw Error(std::string("problem: constraint set ") + name + " does not contain the origin");
    if (!geometry::is_compact(S))
      throw Error(std::string("problem: unbounded constraint set ") + name);
  };
  check_set(Z, "Z");
  check_set(U, "U");
  if (fom.mw() > 0) check_set(W, "W");
  check_set(V, "V");

  if (R.rows() != fom.m() || R.cols() != fom.m()) throw Error("problem: R shape mismatch");
  Eigen::LDLT<Matrix> rl(Matrix(0.5 * (R + R.transpose())));
  if ((R - R.transpose()).norm() > 1e-10 * (1.0 + R.norm()) || !rl.isPositive() ||
      R.diagonal().minCoeff() <= 0.0)
    throw Error("problem: R must be symmetric positive definite");
  if (Qf && (Qf->rows() != fom.n() || Qf->cols() != fom.n()))
    throw Error("problem: Qf shape mismatch");
  if (Wz.rows() != fom.o() || Wz.cols() != fom.o()) throw Error("problem: Wz shape mismatch");
  if (Wu.rows() != fom.m() || Wu.cols() != fom.m()) throw Error("problem: Wu shape mismatch");

  if (rom_dim < 1 || rom_dim > fom.n()) throw Error("problem: reduced dimension out of range");
  if (horizon < 1) throw Error("problem: horizon N must be at least 1");
  if (tau < 1) throw Error("problem: tau must be at least 1");
  if (eta_init < 0.0) throw Error("problem: eta_init must be nonnegative");
  if (gamma_reg <= 0.0) throw Error("problem: gamma_reg must be positive");
  for (const Index idx : tracked_outputs)
    if (idx < 0 || idx >= fom.o()) throw Error("problem: tracked output index out of range");
}

void RompcDesign::validate() const {
  rom.validate();
  const Index n = rom.n(), m = rom.m();
  if (V_basis.cols() != n || W_basis.cols() != n || V_basis.rows() != W_basis.rows())
    throw Error("design: basis shape mismatch");
  if (K.rows() != m || K.cols() != n) throw Error("design: K shape mismatch");
  if (L.rows() != n || L.cols() != rom.p()) throw Error("design: L shape mismatch");
  if (P.rows() != n || P.cols() != n) throw Error("design: P shape mismatch");
  if ((P - P.transpose()).norm() > 1e-8 * (1.0 + P.norm()))
    throw Error("design: P must be symmetric");
  Eigen::LDLT<Matrix> pl(Matrix(0.5 * (P + P.transpose())));
  if (!pl.isPositive() || P.diagonal().minCoeff() <= 0.0)
    throw Error("design: P must be positive definite");
  if (delta_z.size() != Zbar.num_rows() || delta_u.size() != Ubar.num_rows())
    throw Error("design: tightening vector lengths do not match the constraint rows");
  if (delta_z.size() > 0 && delta_z.minCoeff() < 0.0)
    throw Error("design: delta_z has a negative entry");
  if (delta_u.size() > 0 && delta_u.minCoeff() < 0.0)
    throw Error("design: delta_u has a negative entry");
  if (N < 1) throw Error("design: horizon must be at least 1");
  if (time_domain == TimeDomain::Discrete && !(dt > 0.0))
    throw Error("design: discrete design requires dt > 0");
}

}  // namespace rompc
