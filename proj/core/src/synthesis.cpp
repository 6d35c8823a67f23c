#include "rompc/synthesis.hpp"

#include <vector>

#include "rompc/log.hpp"

namespace rompc::synthesis {

namespace {

// PBH test over the full spectrum; `dual` checks observability of (A, C)
// via controllability of (A', C').
bool pbh_full_rank(const Matrix& A, const Matrix& B) {
  const Index n = A.rows();
  const Eigen::VectorXcd ev = A.eigenvalues();
  const double scale = std::max(1.0, A.norm() + B.norm());
  for (Index i = 0; i < n; ++i) {
    Eigen::MatrixXcd pencil(n, n + B.cols());
    pencil << ev[i] * Eigen::MatrixXcd::Identity(n, n) - A.cast<std::complex<double>>(),
        B.cast<std::complex<double>>();
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(pencil);
    if (svd.singularValues()[n - 1] < 1e-10 * scale) return false;
  }
  return true;
}

void check_assumption2(const StateSpaceModel& rom) {
  if (!pbh_full_rank(rom.A, rom.B))
    throw Error("riccati_gains: pair (A, B) of the reduced model is not controllable");
  if (!pbh_full_rank(rom.A.transpose(), rom.C.transpose()))
    throw Error("riccati_gains: pair (A, C) of the reduced model is not observable");
  if (!pbh_full_rank(rom.A.transpose(), rom.H.transpose()))
    throw Error("riccati_gains: pair (A, H) of the reduced model is not observable");
}

}  // namespace

ErrorSystem assemble_error_system(const StateSpaceModel& fom, const StateSpaceModel& rom,
                                  const reduction::ProjectionBasis& basis, const Matrix& K,
                                  const Matrix& L, const Matrix& Hz, const Matrix& Hu) {
  fom.validate();
  rom.validate();
  basis.validate();
  const Index nf = fom.n(), n = rom.n(), m = fom.m(), p = fom.p(), mw = fom.mw();
  if (basis.full_dim() != nf || basis.reduced_dim() != n)
    throw Error("assemble_error_system: basis shape mismatch");
  if (K.rows() != m || K.cols() != n) throw Error("assemble_error_system: K shape mismatch");
  if (L.rows() != n || L.cols() != p) throw Error("assemble_error_system: L shape mismatch");
  if (Hz.cols() != fom.o()) throw Error("assemble_error_system: Hz column mismatch");
  if (Hu.cols() != m) throw Error("assemble_error_system: Hu column mismatch");

  ErrorSystem err;
  err.nf = nf;
  err.n = n;
  err.m = m;
  err.mw = mw;
  err.p = p;
  err.time_domain = fom.time_domain;
  err.dt = fom.dt;
  err.K = K;
  err.L = L;
  err.Hf = fom.H;

  // A_eps, sparse by blocks
  const Matrix BfK = fom.B * K;
  const Matrix LCf = L * fom.C;
  const Matrix Acorner = rom.A + rom.B * K - L * rom.C;
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<std::size_t>(fom.A.nonZeros() + BfK.size() + LCf.size() + Acorner.size()));
  auto add_block = [&trips](const Matrix& M, Index r0, Index c0) {
    for (Index j = 0; j < M.cols(); ++j)
      for (Index i = 0; i < M.rows(); ++i)
        if (M(i, j) != 0.0) trips.emplace_back(r0 + i, c0 + j, M(i, j));
  };
  add_block(fom.A, 0, 0);
  add_block(BfK, 0, nf);
  add_block(LCf, nf, 0);
  add_block(Acorner, nf, nf);
  err.A_eps.resize(nf + n, nf + n);
  err.A_eps.setFromTriplets(trips.begin(), trips.end());

  // B_eps: the residual operator applied to the reduced trajectory
  const Matrix Pperp = basis.complement_projector();
  err.B_eps = Matrix::Zero(nf + n, n + m);
  err.B_eps.topLeftCorner(nf, n) = Pperp * (fom.A * basis.V);
  err.B_eps.topRightCorner(nf, m) = Pperp * fom.B;

  err.G_eps = Matrix::Zero(nf + n, mw + p);
  if (mw > 0) err.G_eps.topLeftCorner(nf, mw) = fom.Bw;
  err.G_eps.bottomRightCorner(n, p) = L;

  err.B_xi = Matrix::Zero(nf + n, n + m);
  err.B_xi.topLeftCorner(nf, n) = -BfK;
  err.B_xi.topRightCorner(nf, m) = fom.B;
  err.B_xi.bottomLeftCorner(n, n) = -rom.B * K;
  err.B_xi.bottomRightCorner(n, m) = rom.B;

  err.E_z = Matrix::Zero(Hz.rows(), nf + n);
  err.E_z.leftCols(nf) = Hz * fom.H;
  err.E_u = Matrix::Zero(Hu.rows(), nf + n);
  err.E_u.rightCols(n) = Hu * K;
  return err;
}

double error_system_spectral_radius(const ErrorSystem& err) {
  if (err.dim() <= 512) return linalg::spectral_radius(err.dense_A());
  return linalg::spectral_radius(err.A_eps);
}

GainPair riccati_gains(const StateSpaceModel& fom, const StateSpaceModel& rom,
                       const reduction::ProjectionBasis& basis, const Matrix& Wz,
                       const Matrix& Wu, double gamma_reg, const Matrix& Hz, const Matrix& Hu) {
  rom.validate();
  if (gamma_reg <= 0.0) throw Error("riccati_gains: gamma_reg must be positive");
  if (Wz.rows() != rom.o() || Wz.cols() != rom.o()) throw Error("riccati_gains: Wz shape mismatch");
  if (Wu.rows() != rom.m() || Wu.cols() != rom.m()) throw Error("riccati_gains: Wu shape mismatch");
  check_assumption2(rom);

  const Index n = rom.n();
  const Matrix R = Wu.transpose() * Wu;
  if (Eigen::FullPivLU<Matrix>(R).rank() < R.rows())
    throw Error("riccati_gains: Wu'Wu must be full rank");
  const Matrix Qz = rom.H.transpose() * Wz.transpose() * Wz * rom.H;
  Matrix Qw = gamma_reg * Matrix::Identity(n, n);
  if (rom.mw() > 0) Qw += rom.Bw * rom.Bw.transpose();

  GainPair gains;
  if (rom.is_discrete()) {
    const Matrix X = linalg::solve_dare(rom.A, rom.B, Qz, R);
    gains.K = -(rom.B.transpose() * X * rom.B + R).ldlt().solve(rom.B.transpose() * X * rom.A);
    const Matrix Y = linalg::solve_dare(rom.A.transpose(), rom.C.transpose(), Qw,
                                        Matrix::Identity(rom.p(), rom.p()));
    const Matrix CYCt_I = rom.C * Y * rom.C.transpose() + Matrix::Identity(rom.p(), rom.p());
    // L = A Y C' (C Y C' + I)^-T, solved rather than inverted
    gains.L = CYCt_I.transpose().ldlt().solve(rom.C * Y.transpose() * rom.A.transpose()).transpose();
  } else {
    const Matrix X = linalg::solve_care(rom.A, rom.B, Qz, R);
    gains.K = -R.ldlt().solve(rom.B.transpose() * X);
    const Matrix Y = linalg::solve_care(rom.A.transpose(), rom.C.transpose(), Qw,
                                        Matrix::Identity(rom.p(), rom.p()));
    gains.L = Y * rom.C.transpose();
  }

  const ErrorSystem err = assemble_error_system(fom, rom, basis, gains.K, gains.L, Hz, Hu);
  if (rom.is_discrete()) {
    gains.rho_Aeps = error_system_spectral_radius(err);
    gains.accepted = gains.rho_Aeps < 1.0;
  } else {
    // continuous acceptance is on the real spectral abscissa
    gains.rho_Aeps = err.dense_A().eigenvalues().real().maxCoeff();
    gains.accepted = gains.rho_Aeps < 0.0;
  }

  // closed-loop norm of the reduced error loop, for reporting
  try {
    const Matrix& A = rom.A;
    Matrix Ar = Matrix::Zero(2 * n, 2 * n);
    Ar.topLeftCorner(n, n) = A;
    Ar.topRightCorner(n, n) = rom.B * gains.K;
    Ar.bottomLeftCorner(n, n) = gains.L * rom.C;
    Ar.bottomRightCorner(n, n) = A + rom.B * gains.K - gains.L * rom.C;
    Matrix Br = Matrix::Zero(2 * n, rom.mw() + rom.p());
    if (rom.mw() > 0) Br.topLeftCorner(n, rom.mw()) = rom.Bw;
    Br.bottomRightCorner(n, rom.p()) = gains.L;
    Matrix Hr = Matrix::Zero(rom.o() + rom.m(), 2 * n);
    Hr.topLeftCorner(rom.o(), n) = Wz * rom.H;
    Hr.bottomRightCorner(rom.m(), n) = Wu * gains.K;
    gains.h2_reduced = linalg::h2_norm(Ar, Br, Hr, rom.time_domain);
  } catch (const Error&) {
    gains.h2_reduced = std::nullopt;
  }
  return gains;
}

double closed_loop_h2(const ErrorSystem& err, const Matrix& Wz, const Matrix& Wu) {
  if (err.dim() > 2000)
    throw Error("closed_loop_h2: dense evaluation capped at 2000 states, got " +
                std::to_string(err.dim()));
  Matrix B_all(err.dim(), err.B_eps.cols() + err.G_eps.cols());
  B_all << err.B_eps, err.G_eps;
  Matrix H_eps = Matrix::Zero(Wz.rows() + Wu.rows(), err.dim());
  H_eps.topLeftCorner(Wz.rows(), err.nf) = Wz * err.Hf;
  H_eps.bottomRightCorner(Wu.rows(), err.n) = Wu * err.K;
  return linalg::h2_norm(err.dense_A(), B_all, H_eps, err.time_domain);
}

}  // namespace rompc::synthesis
