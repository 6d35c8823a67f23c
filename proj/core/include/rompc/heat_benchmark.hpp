#pragma once

#include "rompc/problem.hpp"

namespace rompc::bench {

/// Bundled desk-scale benchmark: a 1-D heat equation on [0, 1], spatially
/// discretized by central differences, boundary-temperature actuation at the
/// left end, a distributed heat-source disturbance, one interior temperature
/// measurement, and two constrained interior temperatures. The continuous
/// dynamics are discretized exactly by zero-order hold.
struct HeatBenchmarkOptions {
  Index nf = 200;          // interior grid points
  double kappa = 1.0;      // diffusivity
  double dt = 0.004;       // sampling period
  Index rom_dim = 10;
  int tau = 300;
  int horizon = 12;
  double w_max = 0.02;     // heat-source disturbance magnitude
  double v_max = 1e-3;     // measurement noise magnitude
  double u_max = 2.0;      // boundary actuation limit
  double z_max = 1.0;      // interior temperature limit
  double bw_scale = 200.0; // disturbance input profile scale
  double wz = 3.0;         // performance weight
  double wu = 0.1;         // control weight
  double eta_init = 1e10;  // initial-error bound; needs tau large enough to wash out
  bool disturbance_free = false;  // W = V = {0}
};

ProblemSpec make_heat_benchmark(const HeatBenchmarkOptions& opts = {});

}  // namespace rompc::bench
