#pragma once

#include <Eigen/Dense>
#include <random>

#include "rompc/state_space.hpp"

namespace testutil {

using rompc::Index;
using rompc::Matrix;
using rompc::Vector;

inline std::mt19937_64 rng(std::uint64_t seed) { return std::mt19937_64(seed); }

inline Matrix random_matrix(std::mt19937_64& gen, Index rows, Index cols, double scale = 1.0) {
  std::normal_distribution<double> dist(0.0, scale);
  Matrix M(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) M(i, j) = dist(gen);
  return M;
}

inline Vector random_vector(std::mt19937_64& gen, Index n, double scale = 1.0) {
  std::normal_distribution<double> dist(0.0, scale);
  Vector v(n);
  for (Index i = 0; i < n; ++i) v[i] = dist(gen);
  return v;
}

// Random matrix rescaled to the requested spectral radius.
inline Matrix random_stable(std::mt19937_64& gen, Index n, double rho_target) {
  Matrix A = random_matrix(gen, n, n);
  const double rho = A.eigenvalues().cwiseAbs().maxCoeff();
  if (rho > 0.0) A *= rho_target / rho;
  return A;
}

// Random matrix with all eigenvalue real parts shifted below -margin.
inline Matrix random_hurwitz(std::mt19937_64& gen, Index n, double margin = 0.2) {
  Matrix A = random_matrix(gen, n, n);
  const double re = A.eigenvalues().real().maxCoeff();
  A -= (re + margin) * Matrix::Identity(n, n);
  return A;
}

inline Matrix random_spd(std::mt19937_64& gen, Index n, double shift = 0.1) {
  Matrix M = random_matrix(gen, n, n);
  return Matrix(M * M.transpose() + shift * Matrix::Identity(n, n));
}

}  // namespace testutil
