#pragma once

#include <optional>
#include <vector>

#include "rompc/polytope.hpp"
#include "rompc/state_space.hpp"

namespace rompc {

using geometry::Polytope;

enum class StartupKind { Zero, StaticGain, OpenLoop };

struct StartupSpec {
  StartupKind kind = StartupKind::Zero;
  Matrix Ks;                     // static gain: u = Ks x_hat
  std::vector<Vector> sequence;  // open loop; the last entry is held
};

enum class DisturbancePolicy { Zero, Uniform, Vertex };

/// Everything the offline pipeline needs, loaded from a problem manifest.
struct ProblemSpec {
  StateSpaceModel fom;
  Polytope Z, U, W, V;

  std::optional<Matrix> Qf;  // absent: use the projected performance cost
  Matrix R;
  Matrix Wz, Wu;

  Index rom_dim = 1;
  int horizon = 10;

  int tau = 100;
  double eta_init = 1e10;
  int i_bar = -1;  // default: tau
  bool skip_delta1 = false;
  bool decay_eigen_route = false;  // default: Lyapunov route
  std::optional<double> decay_eta;

  double gamma_reg = 1e-3;
  double qp_tol = 1e-8;
  double marginal_tol = 1e-8;
  bool terminal_equality = false;

  long k0 = -1;  // default: 2 tau
  StartupSpec startup;
  DisturbancePolicy disturbance = DisturbancePolicy::Uniform;
  std::vector<Index> tracked_outputs;  // rows of z forming T; default: first m

  /// Dimension consistency, compactness of the constraint sets (per-
  /// coordinate support programs), positive definiteness of R, origin
  /// membership. Throws Error naming the violation.
  void validate() const;
};

/// The complete synthesized controller artifact.
struct RompcDesign {
  StateSpaceModel rom;
  Matrix V_basis, W_basis;
  Matrix K, L;
  Matrix P;        // terminal cost
  Matrix Kf;       // terminal feedback associated with P
  Polytope Xf;     // terminal set (around the origin)
  Vector delta_z, delta_u;
  Polytope Zbar, Ubar;
  Matrix Q, R;
  int N = 10;
  double dt = 0.0;
  TimeDomain time_domain = TimeDomain::Discrete;
  double rho_Aeps = 0.0;
  double qp_tol = 1e-8;

  void validate() const;
};

}  // namespace rompc
