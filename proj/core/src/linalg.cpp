#include "rompc/linalg.hpp"

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <random>
#include <sstream>

#include "rompc/log.hpp"

namespace rompc::linalg {

namespace {

using Eigen::MatrixXcd;
using Eigen::VectorXcd;

void require_square(const Matrix& A, const char* who) {
  if (A.rows() != A.cols()) throw Error(std::string(who) + ": matrix must be square");
  if (!A.allFinite()) throw Error(std::string(who) + ": non-finite entries");
}

Matrix symmetrize(Matrix X) {
  X = 0.5 * (X + X.transpose()).eval();
  return X;
}

// Solves T^* Y + Y T + F = 0 for upper triangular complex T (continuous) by
// forward column substitution.
MatrixXcd clyap_triangular(const MatrixXcd& T, const MatrixXcd& F) {
  const Index n = T.rows();
  MatrixXcd Y = MatrixXcd::Zero(n, n);
  for (Index j = 0; j < n; ++j) {
    VectorXcd rhs = -F.col(j);
    for (Index k = 0; k < j; ++k) rhs -= Y.col(k) * T(k, j);
    // (T^* + t_jj I) is lower triangular
    MatrixXcd Lj = T.adjoint();
    Lj.diagonal().array() += T(j, j);
    Y.col(j) = Lj.triangularView<Eigen::Lower>().solve(rhs);
  }
  return Y;
}

// Solves T^* Y T - Y + F = 0 for upper triangular complex T (discrete).
MatrixXcd dlyap_triangular(const MatrixXcd& T, const MatrixXcd& F) {
  const Index n = T.rows();
  MatrixXcd Y = MatrixXcd::Zero(n, n);
  const MatrixXcd Tstar = T.adjoint();
  for (Index j = 0; j < n; ++j) {
    VectorXcd rhs = -F.col(j);
    if (j > 0) {
      VectorXcd acc = VectorXcd::Zero(n);
      for (Index k = 0; k < j; ++k) acc += Y.col(k) * T(k, j);
      rhs -= Tstar * acc;
    }
    // (t_jj T^* - I) y_j = rhs, lower triangular
    MatrixXcd Lj = Tstar * T(j, j);
    Lj.diagonal().array() -= 1.0;
    Y.col(j) = Lj.triangularView<Eigen::Lower>().solve(rhs);
  }
  return Y;
}

void check_spectrum_stable(const Matrix& A, TimeDomain td, const char* who) {
  const VectorXcd ev = A.eigenvalues();
  if (td == TimeDomain::Discrete) {
    const double rho = ev.cwiseAbs().maxCoeff();
    if (rho >= 1.0) throw Error(std::string(who) + ": unstable argument (spectral radius " + std::to_string(rho) + " >= 1)");
  } else {
    const double re = ev.real().maxCoeff();
    if (re >= 0.0) throw Error(std::string(who) + ": unstable argument (max Re lambda " + std::to_string(re) + " >= 0)");
  }
}

}  // namespace

double spectral_radius(const Matrix& A) {
  require_square(A, "spectral_radius");
  if (A.size() == 0) return 0.0;
  return A.eigenvalues().cwiseAbs().maxCoeff();
}

double spectral_radius(const SparseMatrix& A, const ArnoldiOptions& opts) {
  if (A.rows() != A.cols()) throw Error("spectral_radius: matrix must be square");
  const Index n = A.rows();
  if (n == 0) return 0.0;
  const int m = static_cast<int>(std::min<Index>(opts.krylov_dim, n));

  std::mt19937_64 rng(0x5eed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vector v(n);
  for (Index i = 0; i < n; ++i) v[i] = gauss(rng);
  v.normalize();

  double best = 0.0;
  const double anorm = A.coeffs().size() ? A.coeffs().cwiseAbs().maxCoeff() : 0.0;
  if (anorm == 0.0) return 0.0;

  for (int restart = 0; restart < opts.max_restarts; ++restart) {
    Matrix V(n, m + 1);
    Matrix Hm = Matrix::Zero(m + 1, m);
    V.col(0) = v;
    int built = m;
    for (int j = 0; j < m; ++j) {
      Vector w = A * V.col(j);
      // modified Gram-Schmidt with one reorthogonalization pass
      for (int pass = 0; pass < 2; ++pass) {
        for (int i = 0; i <= j; ++i) {
          const double h = V.col(i).dot(w);
          Hm(i, j) += h;
          w -= h * V.col(i);
        }
      }
      const double hnext = w.norm();
      Hm(j + 1, j) = hnext;
      if (hnext < 1e-14 * anorm) {
        built = j + 1;  // invariant subspace found
        break;
      }
      V.col(j + 1) = w / hnext;
    }

    const Matrix Hsq = Hm.topLeftCorner(built, built);
    Eigen::EigenSolver<Matrix> es(Hsq);
    if (es.info() != Eigen::Success) throw Error("spectral_radius: Hessenberg eigensolver failed");

    Index idx = 0;
    es.eigenvalues().cwiseAbs().maxCoeff(&idx);
    const std::complex<double> lambda = es.eigenvalues()[idx];
    best = std::abs(lambda);

    if (built < m) return best;  // exact invariant subspace

    const VectorXcd y = es.eigenvectors().col(idx);
    const double resid = Hm(built, built - 1) * std::abs(y[built - 1]);
    if (resid <= opts.tol * std::max(best, 1e-300)) return best;

    // restart direction enriched in the dominant eigenvector; real-ified
    VectorXcd xc = V.leftCols(built) * y;
    Vector xr = xc.real();
    if (xr.norm() < 1e-12) xr = xc.imag();
    if (std::abs(lambda.imag()) > 0) {
      // rotate a complex pair into a real 2-dim slice deterministically
      xr += V.leftCols(built) * y.imag();
    }
    const double nrm = xr.norm();
    if (nrm < 1e-300) {
      for (Index i = 0; i < n; ++i) xr[i] = gauss(rng);
    }
    v = xr / xr.norm();
  }
  std::ostringstream oss;
  oss << "spectral_radius: Arnoldi iteration did not reach tol " << opts.tol
      << " within " << opts.max_restarts << " restarts (best estimate " << best << ")";
  throw ConvergenceError(oss.str(), best);
}

Matrix solve_dlyap(const Matrix& A, const Matrix& Q) {
  require_square(A, "solve_dlyap");
  if (Q.rows() != A.rows() || Q.cols() != A.cols()) throw Error("solve_dlyap: Q dimension mismatch");
  check_spectrum_stable(A, TimeDomain::Discrete, "solve_dlyap");
  const Index n = A.rows();
  if (n == 0) return Matrix(0, 0);

  Eigen::ComplexSchur<Matrix> schur(A);
  if (schur.info() != Eigen::Success) throw Error("solve_dlyap: Schur decomposition failed");
  const MatrixXcd& T = schur.matrixT();
  const MatrixXcd& U = schur.matrixU();
  const MatrixXcd F = U.adjoint() * Q * U;
  const MatrixXcd Y = dlyap_triangular(T, F);
  Matrix G = (U * Y * U.adjoint()).real();
  return symmetrize(std::move(G));
}

Matrix solve_clyap(const Matrix& A, const Matrix& Q) {
  require_square(A, "solve_clyap");
  if (Q.rows() != A.rows() || Q.cols() != A.cols()) throw Error("solve_clyap: Q dimension mismatch");
  check_spectrum_stable(A, TimeDomain::Continuous, "solve_clyap");
  const Index n = A.rows();
  if (n == 0) return Matrix(0, 0);

  Eigen::ComplexSchur<Matrix> schur(A);
  if (schur.info() != Eigen::Success) throw Error("solve_clyap: Schur decomposition failed");
  const MatrixXcd& T = schur.matrixT();
  const MatrixXcd& U = schur.matrixU();
  const MatrixXcd F = U.adjoint() * Q * U;
  const MatrixXcd Y = clyap_triangular(T, F);
  Matrix G = (U * Y * U.adjoint()).real();
  return symmetrize(std::move(G));
}

namespace {

// PBH stabilizability test: rank [lambda I - A, B] for every unstable lambda.
void check_stabilizable(const Matrix& A, const Matrix& B, TimeDomain td, const char* who) {
  const Index n = A.rows();
  const VectorXcd ev = A.eigenvalues();
  const double scale = std::max(1.0, A.norm() + B.norm());
  for (Index i = 0; i < n; ++i) {
    const bool unstable = (td == TimeDomain::Discrete) ? (std::abs(ev[i]) >= 1.0 - 1e-12)
                                                       : (ev[i].real() >= -1e-12);
    if (!unstable) continue;
    MatrixXcd pencil(n, n + B.cols());
    pencil << (ev[i] * MatrixXcd::Identity(n, n) - A.cast<std::complex<double>>()), B.cast<std::complex<double>>();
    Eigen::JacobiSVD<MatrixXcd> svd(pencil);
    if (svd.singularValues()[n - 1] < 1e-10 * scale) {
      std::ostringstream oss;
      oss << who << ": pair (A,B) not stabilizable, uncontrollable eigenvalue " << ev[i];
      throw Error(oss.str());
    }
  }
}

double dare_residual(const Matrix& A, const Matrix& B, const Matrix& Q, const Matrix& R, const Matrix& X) {
  const Matrix BtXB_R = B.transpose() * X * B + R;
  const Matrix res = A.transpose() * X * A - X -
                     A.transpose() * X * B * BtXB_R.ldlt().solve(B.transpose() * X * A) + Q;
  return res.norm();
}

}  // namespace

Matrix solve_dare(const Matrix& A, const Matrix& B, const Matrix& Q, const Matrix& R) {
  require_square(A, "solve_dare");
  const Index n = A.rows();
  if (B.rows() != n) throw Error("solve_dare: B dimension mismatch");
  if (Q.rows() != n || Q.cols() != n) throw Error("solve_dare: Q dimension mismatch");
  if (R.rows() != B.cols() || R.cols() != B.cols()) throw Error("solve_dare: R dimension mismatch");
  Eigen::LDLT<Matrix> Rldlt(symmetrize(Matrix(R)));
  if (Rldlt.info() != Eigen::Success || !Rldlt.isPositive() ||
      R.diagonal().minCoeff() <= 0.0)
    throw Error("solve_dare: R must be symmetric positive definite");
  check_stabilizable(A, B, TimeDomain::Discrete, "solve_dare");

  // structure-preserving doubling
  Matrix Ak = A;
  Matrix Gk = B * Rldlt.solve(B.transpose());
  Matrix Hk = symmetrize(Matrix(Q));
  const int cap = 200;
  const Index nn = n;
  const Matrix I = Matrix::Identity(nn, nn);
  bool converged = false;
  for (int it = 0; it < cap; ++it) {
    const Matrix W = I + Gk * Hk;
    Eigen::PartialPivLU<Matrix> lu(W);
    const Matrix WiA = lu.solve(Ak);           // (I + G H)^-1 A
    const Matrix WiG = lu.solve(Gk);           // (I + G H)^-1 G
    const Matrix Anext = Ak * WiA;
    const Matrix Gnext = symmetrize(Gk + Ak * WiG * Ak.transpose());
    const Matrix Hnext = symmetrize(Hk + WiA.transpose() * Hk * Ak);
    if (!Anext.allFinite() || !Gnext.allFinite() || !Hnext.allFinite())
      throw Error("solve_dare: doubling iteration diverged (pair may be unstabilizable)");
    const double diff = (Hnext - Hk).norm();
    Ak = Anext;
    Gk = Gnext;
    Hk = Hnext;
    if (diff <= 1e-14 * std::max(1.0, Hk.norm())) {
      converged = true;
      break;
    }
  }
  if (!converged && (!Hk.allFinite() || dare_residual(A, B, Q, R, Hk) > 0.1 * (1.0 + Hk.norm())))
    throw Error("solve_dare: doubling iteration did not converge within 200 iterations");

  // Newton-Kleinman refinement: each step is one discrete Lyapunov solve on
  // the closed loop, which stays accurate where the doubling pass lost
  // digits. The first step may enlarge the residual before quadratic
  // convergence sets in.
  Matrix X_best = Hk;
  double best_res = dare_residual(A, B, Q, R, Hk);
  Matrix Xi = Hk;
  double prev_res = best_res;
  for (int it = 0; it < 40 && best_res > 1e-13 * (1.0 + X_best.norm()); ++it) {
    const Matrix K = -(B.transpose() * Xi * B + R).ldlt().solve(B.transpose() * Xi * A);
    const Matrix Acl = A + B * K;
    if (Acl.eigenvalues().cwiseAbs().maxCoeff() >= 1.0) break;
    Matrix Xn = solve_dlyap(Acl, symmetrize(Matrix(Q + K.transpose() * R * K)));
    const double res = dare_residual(A, B, Q, R, Xn);
    if (!std::isfinite(res)) break;
    if (res < best_res) {
      best_res = res;
      X_best = Xn;
    } else if (it > 0 && res >= prev_res) {
      break;  // stagnated
    }
    prev_res = res;
    Xi = std::move(Xn);
  }
  if (best_res > 1e-9 * (1.0 + X_best.norm()))
    throw Error("solve_dare: residual " + std::to_string(best_res) + " exceeds contract");
  return X_best;
}

Matrix solve_care(const Matrix& A, const Matrix& B, const Matrix& Q, const Matrix& R) {
  require_square(A, "solve_care");
  const Index n = A.rows();
  if (B.rows() != n) throw Error("solve_care: B dimension mismatch");
  if (Q.rows() != n || Q.cols() != n) throw Error("solve_care: Q dimension mismatch");
  if (R.rows() != B.cols() || R.cols() != B.cols()) throw Error("solve_care: R dimension mismatch");
  Eigen::LDLT<Matrix> Rldlt(symmetrize(Matrix(R)));
  if (Rldlt.info() != Eigen::Success || !Rldlt.isPositive() || R.diagonal().minCoeff() <= 0.0)
    throw Error("solve_care: R must be symmetric positive definite");
  check_stabilizable(A, B, TimeDomain::Continuous, "solve_care");

  const Matrix GG = B * Rldlt.solve(B.transpose());
  Matrix Ham(2 * n, 2 * n);
  Ham << A, -GG, -Q, -A.transpose();

  // matrix sign iteration with determinant scaling (log-domain, the
  // determinant itself overflows already at moderate dimensions)
  Matrix Z = Ham;
  for (int it = 0; it < 100; ++it) {
    Eigen::PartialPivLU<Matrix> lu(Z);
    const Matrix Zinv = lu.inverse();
    const double logdet = lu.matrixLU().diagonal().array().abs().log().sum();
    double c = std::exp(logdet / (2.0 * n));
    if (!std::isfinite(c) || c <= 0.0) c = 1.0;
    const Matrix Znext = 0.5 * (Z / c + c * Zinv);
    const double diff = (Znext - Z).norm();
    Z = Znext;
    if (diff <= 1e-13 * Z.norm()) break;
  }

  // the stable invariant subspace is range((I - sign(H))/2); X maps its top
  // block to its bottom block
  const Matrix N = 0.5 * (Matrix::Identity(2 * n, 2 * n) - Z);
  const Matrix N1 = N.topRows(n);
  const Matrix N2 = N.bottomRows(n);
  Matrix X = N1.transpose().colPivHouseholderQr().solve(N2.transpose()).transpose();
  X = symmetrize(std::move(X));

  // Newton-Kleinman refinement via continuous Lyapunov solves. The first
  // step may enlarge the residual before quadratic convergence sets in, so
  // iterate on the current point and keep the best iterate seen.
  auto care_residual = [&](const Matrix& Xc) {
    return (A.transpose() * Xc + Xc * A - Xc * GG * Xc + Q).norm();
  };
  Matrix X_best = X;
  double best_res = care_residual(X);
  Matrix Xi = X;
  double prev_res = best_res;
  for (int it = 0; it < 40 && best_res > 1e-13 * (1.0 + X_best.norm()); ++it) {
    const Matrix Acl = A - GG * Xi;
    if (Acl.eigenvalues().real().maxCoeff() >= 0.0) break;
    Matrix Xn = solve_clyap(Acl, symmetrize(Matrix(Q + Xi * GG * Xi)));
    const double res = care_residual(Xn);
    if (!std::isfinite(res)) break;
    if (res < best_res) {
      best_res = res;
      X_best = Xn;
    } else if (it > 0 && res >= prev_res) {
      break;  // stagnated
    }
    prev_res = res;
    Xi = std::move(Xn);
  }
  if (best_res > 1e-9 * (1.0 + X_best.norm()))
    throw Error("solve_care: residual " + std::to_string(best_res) + " exceeds contract");
  return X_best;
}

Matrix matrix_exponential(const Matrix& A, double t) {
  require_square(A, "matrix_exponential");
  return (A * t).exp();
}

double h2_norm(const Matrix& A, const Matrix& B_in, const Matrix& C_out, TimeDomain td) {
  require_square(A, "h2_norm");
  if (B_in.rows() != A.rows() || C_out.cols() != A.cols()) throw Error("h2_norm: dimension mismatch");
  check_spectrum_stable(A, td, "h2_norm");
  const Matrix Q = B_in * B_in.transpose();
  const Matrix P = (td == TimeDomain::Discrete) ? solve_dlyap(A.transpose(), Q)
                                                : solve_clyap(A.transpose(), Q);
  const double tr = (C_out * P * C_out.transpose()).trace();
  return std::sqrt(std::max(0.0, tr));
}

double h2_norm(const StateSpaceModel& sys) {
  return h2_norm(sys.A, sys.B, sys.H, sys.time_domain);
}

EigenInfo eigen_info(const Matrix& A, double cond_cap) {
  require_square(A, "eigen_info");
  EigenInfo info;
  Eigen::EigenSolver<Matrix> es(A);
  if (es.info() != Eigen::Success) throw Error("eigen_info: eigensolver failed");
  info.eigenvalues = es.eigenvalues();
  info.T = es.eigenvectors();
  Eigen::JacobiSVD<MatrixXcd> svd(info.T);
  const auto& sv = svd.singularValues();
  const double smin = sv[sv.size() - 1];
  info.condition = (smin > 0.0) ? sv[0] / smin : std::numeric_limits<double>::infinity();
  info.diagonalizable = std::isfinite(info.condition) && info.condition < cond_cap;
  if (info.diagonalizable) info.T_inv = info.T.inverse();
  return info;
}

SpectralSplit spectral_split(const Matrix& A, TimeDomain td, double marginal_tol) {
  require_square(A, "spectral_split");
  const Index n = A.rows();

  Eigen::ComplexSchur<Matrix> schur(A);
  if (schur.info() != Eigen::Success) throw Error("spectral_split: Schur decomposition failed");
  MatrixXcd T = schur.matrixT();
  MatrixXcd U = schur.matrixU();

  auto is_stable = [&](const std::complex<double>& lam) {
    if (td == TimeDomain::Discrete) {
      const double mag = std::abs(lam);
      if (std::abs(mag - 1.0) <= marginal_tol) {
        std::ostringstream oss;
        oss << "spectral_split: marginal eigenvalue " << lam << " (|lambda| within " << marginal_tol << " of 1)";
        throw Error(oss.str());
      }
      return mag < 1.0;
    }
    if (std::abs(lam.real()) <= marginal_tol) {
      std::ostringstream oss;
      oss << "spectral_split: marginal eigenvalue " << lam << " (Re lambda within " << marginal_tol << " of 0)";
      throw Error(oss.str());
    }
    return lam.real() < 0.0;
  };

  std::vector<bool> stable(n);
  for (Index i = 0; i < n; ++i) stable[i] = is_stable(T(i, i));

  // reorder the Schur form so stable eigenvalues lead, by adjacent swaps
  auto swap_adjacent = [&](Index k) {
    // exchange T(k,k) and T(k+1,k+1) with a Givens rotation built from the
    // eigenvector [t12, t22 - t11] of the trailing eigenvalue
    const std::complex<double> t11 = T(k, k), t12 = T(k, k + 1), t22 = T(k + 1, k + 1);
    Eigen::JacobiRotation<std::complex<double>> rot;
    rot.makeGivens(t12, t22 - t11);
    T.applyOnTheLeft(k, k + 1, rot.adjoint());
    T.applyOnTheRight(k, k + 1, rot);
    U.applyOnTheRight(k, k + 1, rot);
    T(k + 1, k) = 0.0;
  };
  for (Index target = 0; target < n; ++target) {
    // find next stable eigenvalue at or after target, bubble it up
    Index src = target;
    while (src < n && !stable[src]) ++src;
    if (src == n) break;
    for (Index k = src; k > target; --k) {
      swap_adjacent(k - 1);
      std::swap(stable[k - 1], stable[k]);
    }
  }
  Index ks = 0;
  while (ks < n && stable[ks]) ++ks;

  SpectralSplit out;
  out.spectrum_s = T.diagonal().head(ks);
  out.spectrum_u = T.diagonal().tail(n - ks);

  // block-diagonalize: solve the triangular Sylvester equation
  //   T_ss Y - Y T_uu = -T_su
  const Index ku = n - ks;
  MatrixXcd Tfull_right;  // columns spanning the unstable subspace
  if (ku > 0 && ks > 0) {
    const MatrixXcd Tss = T.topLeftCorner(ks, ks);
    const MatrixXcd Tuu = T.bottomRightCorner(ku, ku);
    const MatrixXcd Tsu = T.topRightCorner(ks, ku);
    MatrixXcd Y(ks, ku);
    for (Index j = 0; j < ku; ++j) {
      VectorXcd rhs = -Tsu.col(j);
      for (Index kk = 0; kk < j; ++kk) rhs += Y.col(kk) * Tuu(kk, j);  // -(-Y T_uu) contribution
      MatrixXcd Lj = Tss;
      Lj.diagonal().array() -= Tuu(j, j);
      Y.col(j) = Lj.triangularView<Eigen::Upper>().solve(rhs);
    }
    Tfull_right = U.leftCols(ks) * Y + U.rightCols(ku);
  } else if (ku > 0) {
    Tfull_right = U;
  }

  auto real_basis = [&](const MatrixXcd& Vc) -> Matrix {
    const Index k = Vc.cols();
    if (k == 0) return Matrix(n, 0);
    Matrix stacked(n, 2 * k);
    stacked << Vc.real(), Vc.imag();
    Eigen::ColPivHouseholderQR<Matrix> qr(stacked);
    qr.setThreshold(1e-12);
    if (qr.rank() < k) throw Error("spectral_split: real basis extraction lost rank");
    return Matrix(qr.householderQ() * Matrix::Identity(n, k));
  };

  const Matrix Vs = real_basis(U.leftCols(ks));
  const Matrix Vu = (ku > 0) ? real_basis(Tfull_right) : Matrix(n, 0);

  Matrix Treal(n, n);
  Treal << Vs, Vu;
  Eigen::PartialPivLU<Matrix> lu(Treal);
  const Matrix Tinv = lu.inverse();
  out.V_s = Vs;
  out.V_u = Vu;
  out.W_s = Tinv.topRows(ks).transpose();
  out.W_u = Tinv.bottomRows(ku).transpose();
  return out;
}

}  // namespace rompc::linalg
