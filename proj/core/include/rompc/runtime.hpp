#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "rompc/ocp.hpp"
#include "rompc/problem.hpp"

namespace rompc::runtime {

/// Steady-state targets for a tracking setpoint r on the selected
/// performance variables: plant equilibrium, estimator rest point, and the
/// simulated-model target the optimizer regulates to.
struct SetpointTarget {
  Vector r;
  Vector x_f_inf, u_inf;
  Vector x_hat_inf;
  Vector x_bar_inf, u_bar_inf;
  bool z_in_Z = true;
  bool u_in_U = true;
};

/// Solves the three steady-state systems in order; residuals verified to
/// 1e-8. Throws on rank deficiency or when the simulated-model target lands
/// outside the tightened sets (margins listed in the message).
SetpointTarget compute_setpoint_targets(const StateSpaceModel& fom, const StateSpaceModel& rom,
                                        const Matrix& K, const Matrix& L, const Polytope& Zbar,
                                        const Polytope& Ubar, const Polytope& Z, const Polytope& U,
                                        const std::vector<Index>& tracked, const Vector& r);

/// Exact zero-order-hold discretization via the augmented exponential;
/// applies to B and Bw alike.
StateSpaceModel zoh_discretize(const StateSpaceModel& ct_model, double dt);

struct ControllerState {
  Vector x_bar, x_hat;
  long k = 0;
  long k0 = 0;
  bool rompc_phase = false;
};

struct StepOutput {
  Vector u;      // applied plant input
  Vector u_bar;  // simulated-model input
  int ocp_status = -1;  // -1 during startup
  double solve_time = 0.0;
  double cost = 0.0;
};

class OcpInfeasibleError : public Error {
 public:
  OcpInfeasibleError(const std::string& msg, long step) : Error(msg), step_(step) {}
  long step() const { return step_; }

 private:
  long step_;
};

/// Online controller: startup phase drives the simulated model to track the
/// plant, the optimizing phase reverses the roles. Holds the OCP warm-start
/// cache; one instance per control loop.
class RompcController {
 public:
  RompcController(const RompcDesign& design, ocp::OcpSpec ocp_spec, long k0,
                  StartupSpec startup = {});
  ~RompcController();
  RompcController(RompcController&&) noexcept;

  /// One step of the online loop: consumes the measurement y_k, returns the
  /// control to apply, and advances the simulated model and estimator.
  StepOutput step(const Vector& y);

  const ControllerState& state() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

struct TrajectoryLog {
  std::vector<long> k;
  Vector t;
  Matrix x_bar, x_hat, u, u_bar, y, z, z_bar, w, v;  // one column per step
  std::vector<int> ocp_status;
  std::vector<double> solve_time;
  std::vector<bool> z_in_Z, u_in_U;
  long k0 = 0;
  long infeasible_at = -1;  // step of first OCP infeasibility, -1 if none

  Index steps() const { return static_cast<Index>(k.size()); }
  void validate() const;
};

struct SimOptions {
  long steps = 100;          // steps after k0
  long k0 = 0;
  std::uint64_t seed = 0;
  DisturbancePolicy disturbance = DisturbancePolicy::Uniform;
  StartupSpec startup;
  std::optional<Vector> x_f_init;       // default: the origin steady state
  std::optional<Vector> setpoint;       // tracking reference r
  std::vector<Index> tracked_outputs;   // rows of z driven to r
  bool stop_on_infeasible = true;
};

/// Closed-loop simulation of the plant under the synthesized controller,
/// with per-step constraint flags. Deterministic for a fixed seed. The
/// terminal ingredients are rebuilt around the setpoint target when one is
/// given.
TrajectoryLog simulate_closed_loop(const ProblemSpec& problem, const RompcDesign& design,
                                   const SimOptions& opts);

/// Continuous-time controller (sampled): the optimizer runs every dt_ocp
/// seconds on the ZOH model, the estimator and simulated model advance by
/// exact ZOH flows every dt_ctrl seconds with inputs and measurements held.
class CtRompcController {
 public:
  CtRompcController(const RompcDesign& design_ct, ocp::OcpSpec ocp_spec_zoh, double t0,
                    double dt_ctrl, double dt_ocp, StartupSpec startup = {});
  ~CtRompcController();
  CtRompcController(CtRompcController&&) noexcept;

  StepOutput step(const Vector& y);
  const ControllerState& state() const;  // k counts dt_ctrl periods

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

struct CtSimOptions {
  double t_final = 1.0;
  double t0 = 0.0;
  double dt_ctrl = 0.0;  // must divide dt_ocp
  double dt_ocp = 0.0;
  std::uint64_t seed = 0;
  DisturbancePolicy disturbance = DisturbancePolicy::Zero;
  StartupSpec startup;
  std::optional<Vector> x_f_init;
};

/// Sampled continuous-time closed loop: the plant advances by its exact ZOH
/// map at dt_ctrl resolution (inputs and disturbances held over each control
/// period).
TrajectoryLog simulate_closed_loop_ct(const StateSpaceModel& fom_ct, const RompcDesign& design_ct,
                                      const Polytope& Z, const Polytope& U, const Polytope& W,
                                      const Polytope& V, const CtSimOptions& opts);

/// Builds the optimizer problem a design implies: tightened sets, costs, and
/// terminal ingredients rebuilt around the target when it is not the origin.
ocp::OcpSpec make_ocp_spec(const RompcDesign& design, const Vector& x_target,
                           const Vector& u_target);

}  // namespace rompc::runtime
