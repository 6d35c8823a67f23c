#include "rompc/heat_benchmark.hpp"

#include "rompc/linalg.hpp"
#include "rompc/runtime.hpp"

namespace rompc::bench {

ProblemSpec make_heat_benchmark(const HeatBenchmarkOptions& opts) {
  const Index nf = opts.nf;
  if (nf < 8) throw Error("heat benchmark: at least 8 grid points required");
  const double h = 1.0 / (nf + 1);
  const double c = opts.kappa / (h * h);

  StateSpaceModel ct;
  ct.A = Matrix::Zero(nf, nf);
  for (Index i = 0; i < nf; ++i) {
    ct.A(i, i) = -2.0 * c;
    if (i > 0) ct.A(i, i - 1) = c;
    if (i + 1 < nf) ct.A(i, i + 1) = c;
  }
  // left boundary temperature enters the first node's stencil
  ct.B = Matrix::Zero(nf, 1);
  ct.B(0, 0) = c;
  // distributed heat source centered at x = 0.6
  ct.Bw = Matrix::Zero(nf, 1);
  for (Index i = 0; i < nf; ++i) {
    const double x = double(i + 1) / (nf + 1);
    ct.Bw(i, 0) = opts.bw_scale * std::exp(-0.5 * std::pow((x - 0.6) / 0.08, 2));
  }
  // one measured temperature, two constrained temperatures
  ct.C = Matrix::Zero(1, nf);
  ct.C(0, nf / 4) = 1.0;
  ct.H = Matrix::Zero(2, nf);
  ct.H(0, static_cast<Index>(nf * 0.33)) = 1.0;
  ct.H(1, static_cast<Index>(nf * 0.66)) = 1.0;
  ct.time_domain = TimeDomain::Continuous;

  ProblemSpec spec;
  spec.fom = runtime::zoh_discretize(ct, opts.dt);

  spec.Z = Polytope::box(Vector::Constant(2, -opts.z_max), Vector::Constant(2, opts.z_max), "Z");
  spec.U = Polytope::interval(-opts.u_max, opts.u_max, "U");
  if (opts.disturbance_free) {
    spec.W = Polytope::origin_point(1, "W");
    spec.V = Polytope::origin_point(1, "V");
  } else {
    spec.W = Polytope::interval(-opts.w_max, opts.w_max, "W");
    spec.V = Polytope::interval(-opts.v_max, opts.v_max, "V");
  }

  spec.R = Matrix::Identity(1, 1);
  spec.Wz = opts.wz * Matrix::Identity(2, 2);
  spec.Wu = opts.wu * Matrix::Identity(1, 1);
  spec.rom_dim = opts.rom_dim;
  spec.horizon = opts.horizon;
  spec.tau = opts.tau;
  spec.eta_init = opts.eta_init;
  spec.i_bar = opts.tau;
  spec.gamma_reg = 1e-3;
  spec.qp_tol = 1e-8;
  spec.k0 = 2 * opts.tau;
  spec.tracked_outputs = {0};  // track the first constrained temperature
  return spec;
}

}  // namespace rompc::bench
