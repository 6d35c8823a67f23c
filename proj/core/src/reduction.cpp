#include "rompc/reduction.hpp"

#include <Eigen/Eigenvalues>

#include "rompc/log.hpp"

namespace rompc::reduction {

namespace {

Matrix gramian_factor(const Matrix& P) {
  // symmetric psd square root factor, eigenvalue-based with clamping
  Eigen::SelfAdjointEigenSolver<Matrix> es(P);
  if (es.info() != Eigen::Success) throw Error("balanced_truncation: Gramian eigensolver failed");
  const Vector lam = es.eigenvalues().cwiseMax(0.0);
  return es.eigenvectors() * lam.cwiseSqrt().asDiagonal();
}

}  // namespace

Matrix ProjectionBasis::wtv_inverse() const {
  const Matrix WtV = W.transpose() * V;
  Eigen::FullPivLU<Matrix> lu(WtV);
  if (!lu.isInvertible()) throw Error("ProjectionBasis: W'V is singular");
  return lu.inverse();
}

double ProjectionBasis::wtv_condition() const {
  Eigen::JacobiSVD<Matrix> svd(W.transpose() * V);
  const auto& sv = svd.singularValues();
  if (sv[sv.size() - 1] <= 0.0) return std::numeric_limits<double>::infinity();
  return sv[0] / sv[sv.size() - 1];
}

Matrix ProjectionBasis::projector() const { return V * wtv_inverse() * W.transpose(); }

Matrix ProjectionBasis::complement_projector() const {
  return Matrix::Identity(full_dim(), full_dim()) - projector();
}

void ProjectionBasis::validate() const {
  if (V.rows() != W.rows() || V.cols() != W.cols())
    throw Error("ProjectionBasis: V and W must have matching shapes");
  if (V.cols() > V.rows()) throw Error("ProjectionBasis: reduced dimension exceeds full dimension");
  const double cond = wtv_condition();
  if (!(cond < 1e12))
    throw Error("ProjectionBasis: W'V condition number " + std::to_string(cond) + " exceeds 1e12");
}

ProjectionResult petrov_galerkin_project(const StateSpaceModel& fom, const ProjectionBasis& basis,
                                         const Matrix* Qf) {
  fom.validate();
  basis.validate();
  if (basis.full_dim() != fom.n()) throw Error("petrov_galerkin_project: basis row count mismatch");

  const Matrix WtVinv = basis.wtv_inverse();
  const Matrix Wt = basis.W.transpose();

  ProjectionResult out;
  out.rom.A = WtVinv * (Wt * fom.A * basis.V);
  out.rom.B = WtVinv * (Wt * fom.B);
  out.rom.Bw = (fom.mw() > 0) ? Matrix(WtVinv * (Wt * fom.Bw)) : Matrix(basis.reduced_dim(), 0);
  out.rom.C = fom.C * basis.V;
  out.rom.H = fom.H * basis.V;
  out.rom.time_domain = fom.time_domain;
  out.rom.dt = fom.dt;
  out.rom.validate();
  if (Qf) {
    if (Qf->rows() != fom.n() || Qf->cols() != fom.n())
      throw Error("petrov_galerkin_project: Qf dimension mismatch");
    out.Q = basis.V.transpose() * (*Qf) * basis.V;
  }
  return out;
}

BalancedTruncation balanced_truncation(const StateSpaceModel& model, Index target_dim) {
  model.validate();
  const Index n = model.n();
  if (target_dim < 1 || target_dim > n)
    throw Error("balanced_truncation: target dimension out of range");

  Matrix Cstack(model.p() + model.o(), n);
  Cstack << model.C, model.H;

  Matrix Pc, Po;
  if (model.is_discrete()) {
    Pc = linalg::solve_dlyap(model.A.transpose(), Matrix(model.B * model.B.transpose()));
    Po = linalg::solve_dlyap(model.A, Matrix(Cstack.transpose() * Cstack));
  } else {
    Pc = linalg::solve_clyap(model.A.transpose(), Matrix(model.B * model.B.transpose()));
    Po = linalg::solve_clyap(model.A, Matrix(Cstack.transpose() * Cstack));
  }

  const Matrix Fc = gramian_factor(Pc);
  const Matrix Fo = gramian_factor(Po);
  Eigen::JacobiSVD<Matrix> svd(Fo.transpose() * Fc, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector hsv = svd.singularValues();

  if (hsv[0] <= 0.0) throw Error("balanced_truncation: system has no reachable/observable part");
  if (hsv[target_dim - 1] <= 1e-13 * hsv[0])
    throw Error("balanced_truncation: target dimension " + std::to_string(target_dim) +
                " exceeds the numerical rank of the Hankel operator");

  const Vector s_inv_sqrt = hsv.head(target_dim).cwiseSqrt().cwiseInverse();
  BalancedTruncation out;
  out.basis.V = Fc * svd.matrixV().leftCols(target_dim) * s_inv_sqrt.asDiagonal();
  out.basis.W = Fo * svd.matrixU().leftCols(target_dim) * s_inv_sqrt.asDiagonal();
  out.hankel_singular_values = hsv;
  return out;
}

SplitBases stable_unstable_split(const StateSpaceModel& model, double marginal_tol) {
  model.validate();
  const linalg::SpectralSplit split = linalg::spectral_split(model.A, model.time_domain, marginal_tol);
  SplitBases out;
  out.stable.V = split.V_s;
  out.stable.W = split.W_s;
  out.unstable.V = split.V_u;
  out.unstable.W = split.W_u;
  out.spectrum_stable = split.spectrum_s;
  out.spectrum_unstable = split.spectrum_u;
  return out;
}

double relative_h2_error(const StateSpaceModel& fom, const StateSpaceModel& rom) {
  fom.validate();
  rom.validate();
  if (fom.m() != rom.m() || fom.o() != rom.o())
    throw Error("relative_h2_error: models must share input/performance dimensions");
  if (fom.time_domain != rom.time_domain) throw Error("relative_h2_error: time domain mismatch");

  const Index nf = fom.n(), nr = rom.n();
  Matrix Ad = Matrix::Zero(nf + nr, nf + nr);
  Ad.topLeftCorner(nf, nf) = fom.A;
  Ad.bottomRightCorner(nr, nr) = rom.A;
  Matrix Bd(nf + nr, fom.m());
  Bd << fom.B, rom.B;
  Matrix Cd(fom.o(), nf + nr);
  Cd << fom.H, -rom.H;

  const double num = linalg::h2_norm(Ad, Bd, Cd, fom.time_domain);
  const double den = linalg::h2_norm(fom.A, fom.B, fom.H, fom.time_domain);
  if (den <= 0.0) throw Error("relative_h2_error: full model has zero H2 norm");
  return num / den;
}

ProjectionBasis reduce_with_split(const StateSpaceModel& fom, Index target_dim,
                                  double marginal_tol, Vector* hsv_out) {
  fom.validate();
  const bool stable = fom.is_discrete()
                          ? linalg::spectral_radius(fom.A) < 1.0 - marginal_tol
                          : fom.A.eigenvalues().real().maxCoeff() < -marginal_tol;
  if (stable) {
    BalancedTruncation bt = balanced_truncation(fom, target_dim);
    if (hsv_out) *hsv_out = bt.hankel_singular_values;
    return std::move(bt.basis);
  }

  const SplitBases split = stable_unstable_split(fom, marginal_tol);
  const Index nu = split.unstable.V.cols();
  if (nu > target_dim)
    throw Error("reduce_with_split: " + std::to_string(nu) +
                " unstable modes exceed the requested reduced dimension " + std::to_string(target_dim));
  log::info("reduce_with_split: retaining " + std::to_string(nu) + " unstable modes unreduced");

  // stable subsystem in the split coordinates
  StateSpaceModel sub;
  sub.A = split.stable.W.transpose() * fom.A * split.stable.V;
  sub.B = split.stable.W.transpose() * fom.B;
  sub.Bw = (fom.mw() > 0) ? Matrix(split.stable.W.transpose() * fom.Bw) : Matrix(sub.A.rows(), 0);
  sub.C = fom.C * split.stable.V;
  sub.H = fom.H * split.stable.V;
  sub.time_domain = fom.time_domain;
  sub.dt = fom.dt;

  BalancedTruncation bt = balanced_truncation(sub, target_dim - nu);
  if (hsv_out) *hsv_out = bt.hankel_singular_values;

  ProjectionBasis combined;
  combined.V.resize(fom.n(), target_dim);
  combined.W.resize(fom.n(), target_dim);
  combined.V << split.stable.V * bt.basis.V, split.unstable.V;
  combined.W << split.stable.W * bt.basis.W, split.unstable.W;
  return combined;
}

}  // namespace rompc::reduction
