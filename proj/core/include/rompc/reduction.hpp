#pragma once

#include <optional>
#include <utility>

#include "rompc/linalg.hpp"
#include "rompc/state_space.hpp"

namespace rompc::reduction {

/// Trial/test basis pair (V, W) of a Petrov-Galerkin projection
/// P = V (W'V)^-1 W'. Galerkin when W = V.
struct ProjectionBasis {
  Matrix V;
  Matrix W;

  Index full_dim() const { return V.rows(); }
  Index reduced_dim() const { return V.cols(); }

  /// (W'V)^-1, rejecting condition numbers above 1e12.
  Matrix wtv_inverse() const;
  double wtv_condition() const;
  Matrix projector() const;              // V (W'V)^-1 W'
  Matrix complement_projector() const;   // I - projector

  void validate() const;
};

struct ProjectionResult {
  StateSpaceModel rom;
  std::optional<Matrix> Q;  // V' Qf V when a full-order state cost was given
};

/// Projects the full order model onto the basis:
///   A = (W'V)^-1 W' Af V,  B = (W'V)^-1 W' Bf,  Bw likewise,
///   C = Cf V,  H = Hf V,   Q = V' Qf V.
ProjectionResult petrov_galerkin_project(const StateSpaceModel& fom, const ProjectionBasis& basis,
                                         const Matrix* Qf = nullptr);

struct BalancedTruncation {
  ProjectionBasis basis;           // W'V = I by construction
  Vector hankel_singular_values;   // all of them, descending
};

/// Square-root balanced truncation of a stable model. The observability
/// Gramian is taken for the stacked output [C; H], the controllability
/// Gramian for the control input B.
BalancedTruncation balanced_truncation(const StateSpaceModel& model, Index target_dim);

struct SplitBases {
  ProjectionBasis stable;    // V_s, W_s with W_s'V_s = I
  ProjectionBasis unstable;  // zero columns when the model is stable
  Eigen::VectorXcd spectrum_stable;
  Eigen::VectorXcd spectrum_unstable;
};

/// A-invariant stable/unstable decomposition of the model state space.
/// Eigenvalues within marginal_tol of the stability boundary are rejected.
SplitBases stable_unstable_split(const StateSpaceModel& model, double marginal_tol = 1e-8);

/// Relative H2 model error  |Sigma - Sigma_r|_H2 / |Sigma|_H2  of the u -> z
/// channels, computed exactly from the Gramian of the stacked difference
/// system.
double relative_h2_error(const StateSpaceModel& fom, const StateSpaceModel& rom);

/// Reduces a (possibly unstable) model to `target_dim`: unstable modes are
/// retained unreduced, the stable subsystem is balanced-truncated to make up
/// the remainder. Returns the combined basis.
ProjectionBasis reduce_with_split(const StateSpaceModel& fom, Index target_dim,
                                  double marginal_tol = 1e-8,
                                  Vector* hankel_singular_values = nullptr);

}  // namespace rompc::reduction
