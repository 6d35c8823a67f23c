#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "rompc/lp.hpp"
#include "rompc/polytope.hpp"
#include "rompc/synthesis.hpp"

namespace rompc::bounds {

using geometry::Polytope;
using synthesis::ErrorSystem;

enum class DecayMethod { Lyapunov, Eigenvalue };

/// Certificate (M, gamma, G) with |A_eps^i|_G <= M gamma^i for all i >= 0.
struct DecayParameters {
  double M = 1.0;
  double gamma = 0.0;       // in (0,1)
  Matrix G;                 // positive definite weight
  Matrix G_half;            // symmetric G^{1/2}
  Matrix G_half_inv;        // symmetric G^{-1/2}
  DecayMethod method = DecayMethod::Lyapunov;
  double eta = 0.0;         // Lyapunov route parameter

  /// |theta' G^{-1/2}|_2, the row weight entering the combined bounds.
  double row_weight(const Vector& theta) const;
  /// max_i |A^i|_G / (M gamma^i) over i in `powers`; <= 1 certifies.
  double certificate_margin(const Matrix& A, const std::vector<int>& powers) const;
};

/// Lyapunov route: G solves A' G A - eta^2 G + I = 0 (eta in (rho, 1)),
/// gamma = |A|_G <= eta, M = 1. Eigenvalue route: gamma = max |lambda_j|,
/// M = |G^{1/2} T|_2 |T^-1 G^{-1/2}|_2 for a diagonalization A = T D T^-1;
/// G defaults to the identity.
DecayParameters compute_decay_params(const Matrix& A_eps, DecayMethod method,
                                     std::optional<double> eta = std::nullopt,
                                     const Matrix* G_eigen = nullptr);

/// Hyper-rectangle containing every reachable simulated-ROM state under the
/// performance and control constraints: each face solved as an LP over an
/// i_bar-step constrained trajectory (condensed). Requires i_bar >= n-1.
Polytope compute_xbar(const StateSpaceModel& rom, const Polytope& Z, const Polytope& U,
                      int i_bar, const solvers::LpOptions& lp_opts = {});

/// Worst-case G-weighted input magnitudes
///   C_r = max |B_eps [xbar; ubar]|_G over Xbar x U,
///   C_w = max |G_eps [w; v]|_G over W x V,
/// by exact vertex enumeration of the product sets.
std::pair<double, double> compute_cr_cw(const ErrorSystem& err, const Polytope& Xbar,
                                        const Polytope& U, const Polytope& W, const Polytope& V,
                                        const DecayParameters& params);

/// Tail bound M gamma^{2 tau} eta_init + M gamma^tau (C_r + C_w)/(1-gamma).
/// Terms below 1e-300 are clamped to zero with a warning.
double delta1(const DecayParameters& params, double eta_init, int tau, double C_r, double C_w);

/// Continuous-time tail bound beta e^{2 alpha tau} eta + beta e^{alpha tau}
/// (C_r + C_w)/(-alpha); requires alpha < 0, beta >= 1.
double ct_delta1(double beta, double alpha, double eta_init, double tau_seconds, double C_r,
                 double C_w);

/// Worst-case recent-window error component: the linear program maximizing
///   theta' sum_j A_eps^{tau-1-j} (B_eps r_j + G_eps w_j)
/// over constrained simulated-ROM trajectories and admissible disturbances.
/// The trajectory is condensed onto (initial state, controls, disturbances)
/// and the program is solved through its dual so one basis serves every
/// constraint row: construct once, then call solve() per row.
class Delta2Solver {
 public:
  Delta2Solver(const ErrorSystem& err, const StateSpaceModel& rom, const Polytope& Xbar,
               const Polytope& Z, const Polytope& U, const Polytope& W, const Polytope& V,
               int tau, solvers::LpOptions lp_opts = {});
  ~Delta2Solver();
  Delta2Solver(Delta2Solver&&) noexcept;

  double solve(const Vector& theta);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

double delta2(const ErrorSystem& err, const Vector& theta, const StateSpaceModel& rom,
              const Polytope& Xbar, const Polytope& Z, const Polytope& U, const Polytope& W,
              const Polytope& V, int tau);

/// Continuous-time counterpart: trapezoid quadrature on an evenly spaced
/// grid with spacing dt, ZOH-discretized trajectory constraints.
class CtDelta2Solver {
 public:
  CtDelta2Solver(const ErrorSystem& err_ct, const StateSpaceModel& rom_d, const Polytope& Xbar,
                 const Polytope& Z, const Polytope& U, const Polytope& W, const Polytope& V,
                 double tau_seconds, double dt, solvers::LpOptions lp_opts = {});
  ~CtDelta2Solver();
  CtDelta2Solver(CtDelta2Solver&&) noexcept;

  double solve(const Vector& theta);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

double ct_delta2(const ErrorSystem& err_ct, const Vector& theta, const StateSpaceModel& rom_d,
                 const Polytope& Xbar, const Polytope& Z, const Polytope& U, const Polytope& W,
                 const Polytope& V, double tau_seconds, double dt);

struct BoundReport {
  double delta1_value = 0.0;
  bool delta1_skipped = false;  // large-tau waiver: bounds are recent-window only
  Vector delta2_z, delta2_u;
  Vector delta_z, delta_u;      // combined row bounds
  double C_r = 0.0, C_w = 0.0;
  double M = 1.0, gamma = 0.0;
  int tau = 0;
  double tau_seconds = 0.0;     // continuous-time runs
  std::vector<double> decay_profile;

  // Tightening diagnostics, in percent of the original constraint offsets:
  // r from the tail term alone, t from the full bounds.
  double r_percent = 0.0;
  double tz_max = 0.0, tz_min = 0.0, tu_max = 0.0, tu_min = 0.0;
};

/// Combines the tail and recent-window components row by row:
///   Delta_i = |e_i' G^{-1/2}|_2 Delta1 + Delta2(e_i),
/// and fills the percentage diagnostics against b_z, b_u.
BoundReport combine_bounds(double delta1_value, bool delta1_skipped, const DecayParameters& params,
                           const ErrorSystem& err, const Vector& delta2_z, const Vector& delta2_u,
                           const Polytope& Z, const Polytope& U);

/// |E A_eps^t B_eps|_2 for t = 0..t_max with E = [E_z; E_u], by recursive
/// row propagation (A_eps powers are never formed).
std::vector<double> norm_decay_profile(const ErrorSystem& err, int t_max);

/// Smallest t with profile[t] <= threshold, or -1 if never reached.
int tau_for_threshold(const std::vector<double>& profile, double threshold);

struct BoundsOptions {
  int tau = 100;
  double eta_init = 1e10;
  int i_bar = -1;               // default: tau
  bool skip_delta1 = false;
  DecayMethod method = DecayMethod::Lyapunov;
  std::optional<double> eta;    // Lyapunov route parameter
  int jobs = 1;
  int profile_t_max = -1;       // default: 2*tau
  solvers::LpOptions lp;
};

/// Full discrete-time error-bound analysis: Xbar, (C_r, C_w), (M, gamma, G),
/// Delta1, per-row Delta2 programs, combination, and the decay profile.
/// `params_out`, when given, receives the decay certificate (untouched under
/// skip_delta1).
BoundReport error_bounds(const ErrorSystem& err, const StateSpaceModel& rom, const Polytope& Z,
                         const Polytope& U, const Polytope& W, const Polytope& V,
                         const BoundsOptions& opts, DecayParameters* params_out = nullptr);

}  // namespace rompc::bounds
