#include "rompc/bounds.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <thread>
#include <unordered_map>

#include "rompc/log.hpp"

namespace rompc::bounds {

namespace {

using solvers::RevisedSimplex;
using solvers::SolveResult;
using solvers::SolveStatus;

Matrix spd_power(const Matrix& G, double exponent, const char* who) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(G);
  if (es.info() != Eigen::Success) throw Error(std::string(who) + ": eigensolver failed on G");
  const double lmin = es.eigenvalues().minCoeff();
  if (lmin <= 0.0) throw Error(std::string(who) + ": G is not positive definite");
  return es.eigenvectors() * es.eigenvalues().array().pow(exponent).matrix().asDiagonal() *
         es.eigenvectors().transpose();
}

double spectral_norm(const Matrix& M) {
  if (M.size() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(M);
  return svd.singularValues()[0];
}

// Accumulates primal rows of max c'v s.t. Av <= b (v free) and hands the
// dual min b'y, A'y = c, y >= 0 to the simplex core. Rows are normalized by
// their largest coefficient, and a duplicate row (same normalized
// coefficients) only survives with the smallest offset: constrained
// trajectory programs generate thousands of parallel membership rows once
// the dynamics have mixed, and the dominated copies would both bloat and
// ill-condition the dual.
struct DualBuilder {
  Index num_vars;
  std::vector<std::pair<Index, double>> cur;
  std::vector<std::vector<std::pair<Index, double>>> row_data;
  std::vector<double> rhs;
  std::unordered_map<std::size_t, std::vector<Index>> signature;
  Vector hull_lo, hull_hi;  // per-variable interval hull implied by kept rows
  Index eliminated = 0;

  explicit DualBuilder(Index nv) : num_vars(nv) {
    hull_lo = Vector::Constant(nv, -std::numeric_limits<double>::infinity());
    hull_hi = Vector::Constant(nv, std::numeric_limits<double>::infinity());
  }

  void set_hull(Index var, double lo, double hi) {
    hull_lo[var] = lo;
    hull_hi[var] = hi;
  }

  void coeff(Index var, double val) {
    if (val != 0.0) cur.emplace_back(var, val);
  }

  // Exact redundancy certificate over the interval hull: a row whose worst
  // case is strictly below its offset can never be active, and the hull
  // itself is carried by rows that are always kept.
  bool hull_redundant(double b) const {
    double ub = 0.0;
    for (const auto& [v, val] : cur) {
      ub += (val >= 0.0) ? val * hull_hi[v] : val * hull_lo[v];
      if (!std::isfinite(ub)) return false;
    }
    return ub < b;
  }

  void finish_row(double b, bool eliminable = false) {
    if (cur.empty()) {
      if (b < 0.0) throw Error("trajectory program: empty row with negative offset");
      cur.clear();
      return;  // 0 <= b always holds
    }
    if (eliminable && hull_redundant(b)) {
      ++eliminated;
      cur.clear();
      return;
    }
    std::sort(cur.begin(), cur.end(),
              [](const auto& a, const auto& b2) { return a.first < b2.first; });
    double rmax = 0.0;
    for (const auto& [v, val] : cur) rmax = std::max(rmax, std::abs(val));
    for (auto& [v, val] : cur) val /= rmax;
    const double bn = b / rmax;

    std::size_t h = cur.size();
    for (const auto& [v, val] : cur) {
      h ^= std::hash<long long>()(v) + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
      h ^= std::hash<long long>()(std::llround(val * 1e10)) + 0x9e3779b97f4a7c15ull + (h << 6) +
           (h >> 2);
    }
    auto& bucket = signature[h];
    for (const Index r : bucket) {
      const auto& other = row_data[r];
      if (other.size() != cur.size()) continue;
      bool same = true;
      for (std::size_t i = 0; i < cur.size() && same; ++i)
        same = other[i].first == cur[i].first &&
               std::abs(other[i].second - cur[i].second) <= 1e-12;
      if (same) {
        rhs[r] = std::min(rhs[r], bn);
        cur.clear();
        return;
      }
    }
    bucket.push_back(static_cast<Index>(row_data.size()));
    row_data.push_back(cur);
    rhs.push_back(bn);
    cur.clear();
  }

  RevisedSimplex build(const Vector& c, const solvers::LpOptions& opts) {
    const Index rows = static_cast<Index>(row_data.size());
    std::vector<Eigen::Triplet<double>> trips;
    std::size_t nnz = 0;
    for (const auto& row : row_data) nnz += row.size();
    trips.reserve(nnz);
    for (Index r = 0; r < rows; ++r)
      for (const auto& [v, val] : row_data[r]) trips.emplace_back(v, r, val);
    Eigen::SparseMatrix<double> M(num_vars, rows);
    M.setFromTriplets(trips.begin(), trips.end());
    Vector gamma = Eigen::Map<const Vector>(rhs.data(), rows);
    return RevisedSimplex(std::move(M), c, std::move(gamma), opts);
  }
};

// Per-constraint-family power tables: p[j] = g A^j and pb[j] = p[j] B.
struct FamilyTable {
  std::vector<Vector> p;   // row vectors as column storage
  std::vector<Vector> pb;  // length-m pieces
};

FamilyTable build_family(const Vector& g, const Matrix& A, const Matrix& B, int max_pow) {
  FamilyTable t;
  t.p.reserve(max_pow + 1);
  t.pb.reserve(max_pow + 1);
  Vector cur = g;
  for (int j = 0; j <= max_pow; ++j) {
    t.pb.push_back(B.transpose() * cur);
    t.p.push_back(cur);
    cur = A.transpose() * cur;
  }
  return t;
}


// per-coordinate interval hull of a polytope: the box fast path, support
// programs otherwise
std::pair<Vector, Vector> coordinate_bounds(const Polytope& S) {
  if (const auto box = S.as_box()) return *box;
  Vector lo(S.dim()), hi(S.dim());
  for (Index j = 0; j < S.dim(); ++j) {
    Vector e = Vector::Zero(S.dim());
    e[j] = 1.0;
    hi[j] = geometry::support_max(e, S);
    e[j] = -1.0;
    lo[j] = -geometry::support_max(e, S);
  }
  return {lo, hi};
}

double interpret_cf(const SolveStatus& st, const char* who) {
  switch (st.status) {
    case SolveResult::Optimal:
      return st.objective;
    case SolveResult::Infeasible:
      // dual infeasible = primal unbounded
      throw Error(std::string(who) +
                  ": trajectory program is unbounded; the bounding set construction failed "
                  "(check observability of the reduced pair (A, H))");
    case SolveResult::Unbounded:
      throw Error(std::string(who) +
                  ": trajectory program infeasible; constraint sets no longer contain the origin");
    default:
      throw Error(std::string(who) + ": LP pivot cap reached without convergence");
  }
}

}  // namespace

double DecayParameters::row_weight(const Vector& theta) const {
  return (G_half_inv * theta).norm();
}

double DecayParameters::certificate_margin(const Matrix& A, const std::vector<int>& powers) const {
  double worst = 0.0;
  Matrix Ai = Matrix::Identity(A.rows(), A.cols());
  int cur = 0;
  for (const int i : powers) {
    while (cur < i) {
      Ai = Ai * A;
      ++cur;
    }
    const double lhs = spectral_norm(G_half * Ai * G_half_inv);
    worst = std::max(worst, lhs / (M * std::pow(gamma, i)));
  }
  return worst;
}

DecayParameters compute_decay_params(const Matrix& A_eps, DecayMethod method,
                                     std::optional<double> eta, const Matrix* G_eigen) {
  if (A_eps.rows() != A_eps.cols()) throw Error("compute_decay_params: A_eps must be square");
  const Index dim = A_eps.rows();
  const double rho = linalg::spectral_radius(A_eps);
  if (rho >= 1.0)
    throw Error("compute_decay_params: A_eps is not Schur stable (rho = " + std::to_string(rho) + ")");

  DecayParameters out;
  out.method = method;
  if (method == DecayMethod::Lyapunov) {
    // default eta sits near rho: the gamma^tau decay it buys outweighs the
    // growth of the weighting norm
    const double e = eta.value_or(rho + 0.25 * (1.0 - rho));
    if (!(e > rho && e < 1.0))
      throw Error("compute_decay_params: eta = " + std::to_string(e) +
                  " must lie in (rho, 1) = (" + std::to_string(rho) + ", 1)");
    out.eta = e;
    const Matrix As = A_eps / e;
    out.G = linalg::solve_dlyap(As, Matrix(Matrix::Identity(dim, dim) / (e * e)));
    out.G_half = spd_power(out.G, 0.5, "compute_decay_params");
    out.G_half_inv = spd_power(out.G, -0.5, "compute_decay_params");
    out.gamma = spectral_norm(out.G_half * A_eps * out.G_half_inv);
    out.M = 1.0;
    if (out.gamma >= 1.0)
      throw Error("compute_decay_params: computed gamma = " + std::to_string(out.gamma) +
                  " not contractive; choose eta closer to 1");
  } else {
    const linalg::EigenInfo info = linalg::eigen_info(A_eps);
    if (!info.diagonalizable)
      throw Error("compute_decay_params: A_eps is numerically defective (cond(T) = " +
                  std::to_string(info.condition) + "), eigenvalue route unavailable");
    out.gamma = info.eigenvalues.cwiseAbs().maxCoeff();
    out.G = G_eigen ? *G_eigen : Matrix::Identity(dim, dim);
    out.G_half = spd_power(out.G, 0.5, "compute_decay_params");
    out.G_half_inv = spd_power(out.G, -0.5, "compute_decay_params");
    const Eigen::MatrixXcd GT = out.G_half.cast<std::complex<double>>() * info.T;
    const Eigen::MatrixXcd TG = info.T_inv * out.G_half_inv.cast<std::complex<double>>();
    Eigen::JacobiSVD<Eigen::MatrixXcd> s1(GT), s2(TG);
    out.M = std::max(1.0, s1.singularValues()[0] * s2.singularValues()[0]);
    out.eta = 0.0;
  }
  return out;
}

Polytope compute_xbar(const StateSpaceModel& rom, const Polytope& Z, const Polytope& U,
                      int i_bar, const solvers::LpOptions& lp_opts) {
  rom.validate();
  const Index n = rom.n(), m = rom.m();
  if (i_bar < n - 1)
    throw Error("compute_xbar: i_bar = " + std::to_string(i_bar) +
                " must be at least n - 1 = " + std::to_string(n - 1));
  if (Z.dim() != rom.o()) throw Error("compute_xbar: Z dimension mismatch");
  if (U.dim() != m) throw Error("compute_xbar: U dimension mismatch");

  // condensed trajectory program: variables [x0; u_0 .. u_{i_bar-1}]
  const Index nv = n + i_bar * m;
  const Matrix HzH = Z.H * rom.H;
  std::vector<FamilyTable> zfam;
  for (Index r = 0; r < HzH.rows(); ++r)
    zfam.push_back(build_family(HzH.row(r).transpose(), rom.A, rom.B, i_bar));

  DualBuilder db(nv);
  {
    const auto [ulo, uhi] = coordinate_bounds(U);
    for (int i = 0; i < i_bar; ++i)
      for (Index j = 0; j < m; ++j) db.set_hull(n + i * m + j, ulo[j], uhi[j]);
  }
  for (int i = 0; i <= i_bar; ++i) {
    for (std::size_t f = 0; f < zfam.size(); ++f) {
      const auto& tab = zfam[f];
      double rmax = tab.p[i].cwiseAbs().maxCoeff();
      for (int k = 0; k < i; ++k) rmax = std::max(rmax, tab.pb[i - 1 - k].cwiseAbs().maxCoeff());
      const double cut = 1e-14 * rmax;
      for (Index j = 0; j < n; ++j)
        if (std::abs(tab.p[i][j]) > cut) db.coeff(j, tab.p[i][j]);
      for (int k = 0; k < i; ++k) {
        const Vector& pc = tab.pb[i - 1 - k];
        for (Index j = 0; j < m; ++j)
          if (std::abs(pc[j]) > cut) db.coeff(n + k * m + j, pc[j]);
      }
      db.finish_row(Z.b[static_cast<Index>(f)], /*eliminable=*/true);
    }
  }
  for (int i = 0; i < i_bar; ++i) {
    for (Index r = 0; r < U.num_rows(); ++r) {
      for (Index j = 0; j < m; ++j) db.coeff(n + i * m + j, U.H(r, j));
      db.finish_row(U.b[r]);
    }
  }

  Vector c = Vector::Zero(nv);
  c[0] = 1.0;
  RevisedSimplex simplex = db.build(c, lp_opts);

  Vector hi(n), lo(n);
  bool first = true;
  for (Index j = 0; j < n; ++j) {
    for (const double sign : {1.0, -1.0}) {
      c.setZero();
      c[j] = sign;
      const SolveStatus st = first ? simplex.solve() : simplex.resolve_with_rhs(c);
      first = false;
      const double val = interpret_cf(st, "compute_xbar");
      if (sign > 0)
        hi[j] = val;
      else
        lo[j] = -val;
    }
  }
  Polytope X = Polytope::box(lo, hi, "Xbar");
  return X;
}

std::pair<double, double> compute_cr_cw(const ErrorSystem& err, const Polytope& Xbar,
                                        const Polytope& U, const Polytope& W, const Polytope& V,
                                        const DecayParameters& params) {
  if (Xbar.dim() != err.n) throw Error("compute_cr_cw: Xbar dimension mismatch");
  if (U.dim() != err.m) throw Error("compute_cr_cw: U dimension mismatch");
  const double C_r = geometry::weighted_norm_max(err.B_eps, params.G, {&Xbar, &U});

  std::vector<const Polytope*> wfactors;
  if (err.mw > 0) {
    if (W.dim() != err.mw) throw Error("compute_cr_cw: W dimension mismatch");
    wfactors.push_back(&W);
  }
  if (V.dim() != err.p) throw Error("compute_cr_cw: V dimension mismatch");
  wfactors.push_back(&V);
  const double C_w = geometry::weighted_norm_max(err.G_eps, params.G, wfactors);
  return {C_r, C_w};
}

double delta1(const DecayParameters& params, double eta_init, int tau, double C_r, double C_w) {
  if (!(params.gamma > 0.0 && params.gamma < 1.0))
    throw Error("delta1: gamma must lie in (0,1)");
  if (eta_init < 0.0 || C_r < 0.0 || C_w < 0.0 || tau < 1)
    throw Error("delta1: nonnegative inputs and tau >= 1 required");
  const double g2t = params.M * std::pow(params.gamma, 2.0 * tau) * eta_init;
  const double gt = params.M * std::pow(params.gamma, tau) * (C_r + C_w) / (1.0 - params.gamma);
  double total = 0.0;
  for (double term : {g2t, gt}) {
    if (term != 0.0 && term < 1e-300) {
      log::warn("delta1: term underflowed below 1e-300, clamped to zero");
      term = 0.0;
    }
    total += term;
  }
  return total;
}

double ct_delta1(double beta, double alpha, double eta_init, double tau_seconds, double C_r,
                 double C_w) {
  if (alpha >= 0.0) throw Error("ct_delta1: alpha must be negative");
  if (beta < 1.0) throw Error("ct_delta1: beta must be at least 1");
  if (eta_init < 0.0 || C_r < 0.0 || C_w < 0.0 || tau_seconds <= 0.0)
    throw Error("ct_delta1: nonnegative inputs and tau > 0 required");
  double t1 = beta * std::exp(2.0 * alpha * tau_seconds) * eta_init;
  double t2 = beta * std::exp(alpha * tau_seconds) * (C_r + C_w) / (-alpha);
  if (t1 != 0.0 && t1 < 1e-300) t1 = 0.0;
  if (t2 != 0.0 && t2 < 1e-300) t2 = 0.0;
  return t1 + t2;
}

// ---------------------------------------------------------------------------
// Delta2 (discrete)

struct Delta2Solver::Impl {
  Index nf, n, m, p;
  Index mw_eff, p_eff;  // zero-singleton disturbance factors are dropped
  int tau;
  Index nv;
  Matrix A, B;                     // reduced dynamics
  Eigen::SparseMatrix<double> At;  // A_eps transposed, for objective rows
  Matrix B_eps, G_eps;
  std::optional<RevisedSimplex> simplex;
  solvers::LpOptions lp_opts;
  bool solved_once = false;
  DualBuilder db;

  Index u_off(int i) const { return n + static_cast<Index>(i + tau) * m; }
  Index w_off(int j) const {
    return n + static_cast<Index>(2 * tau) * m + static_cast<Index>(j) * (mw_eff + p_eff);
  }

  Impl(const ErrorSystem& err, const StateSpaceModel& rom, const Polytope& Xbar, const Polytope& Z,
       const Polytope& U, const Polytope& W, const Polytope& V, int tau_in,
       solvers::LpOptions opts)
      : nf(err.nf),
        n(err.n),
        m(err.m),
        p(err.p),
        mw_eff(0),
        p_eff(0),
        tau(tau_in),
        nv(0),
        A(rom.A),
        B(rom.B),
        At(err.A_eps.transpose()),
        B_eps(err.B_eps),
        G_eps(err.G_eps),
        lp_opts(opts),
        db(0) {
    if (tau < 1) throw Error("delta2: tau must be at least 1");
    if (Xbar.dim() != n || U.dim() != m) throw Error("delta2: set dimension mismatch");
    if (Z.dim() != rom.o()) throw Error("delta2: Z dimension mismatch");
    const bool drop_w = (err.mw == 0) || W.is_zero_singleton();
    const bool drop_v = V.is_zero_singleton();
    mw_eff = drop_w ? 0 : err.mw;
    p_eff = drop_v ? 0 : p;

    nv = n + 2 * tau * m + tau * (mw_eff + p_eff);
    db = DualBuilder(nv);
    {
      const auto [xlo, xhi] = coordinate_bounds(Xbar);
      for (Index j = 0; j < n; ++j) db.set_hull(j, xlo[j], xhi[j]);
      const auto [ulo, uhi] = coordinate_bounds(U);
      for (int i = -tau; i <= tau - 1; ++i)
        for (Index j = 0; j < m; ++j) db.set_hull(u_off(i) + j, ulo[j], uhi[j]);
      if (mw_eff > 0 || p_eff > 0) {
        Vector wlo, whi, vlo, vhi;
        if (mw_eff > 0) std::tie(wlo, whi) = coordinate_bounds(W);
        if (p_eff > 0) std::tie(vlo, vhi) = coordinate_bounds(V);
        for (int jj = 0; jj < tau; ++jj) {
          for (Index kk = 0; kk < mw_eff; ++kk) db.set_hull(w_off(jj) + kk, wlo[kk], whi[kk]);
          for (Index kk = 0; kk < p_eff; ++kk)
            db.set_hull(w_off(jj) + mw_eff + kk, vlo[kk], vhi[kk]);
        }
      }
    }

    // trajectory membership rows, condensed through the dynamics
    const int max_pow = 2 * tau;
    std::vector<FamilyTable> fams;
    std::vector<double> fam_rhs;
    for (Index r = 0; r < Xbar.num_rows(); ++r) {
      fams.push_back(build_family(Xbar.H.row(r).transpose(), A, B, max_pow));
      fam_rhs.push_back(Xbar.b[r]);
    }
    const Matrix HzH = Z.H * rom.H;
    for (Index r = 0; r < HzH.rows(); ++r) {
      fams.push_back(build_family(HzH.row(r).transpose(), A, B, max_pow));
      fam_rhs.push_back(Z.b[r]);
    }

    for (int i = -tau; i <= tau - 1; ++i) {
      const int pw = i + tau;
      for (std::size_t f = 0; f < fams.size(); ++f) {
        const auto& tab = fams[f];
        // prune coefficients that decayed to numerical dust; they destroy
        // the scaling of the program without carrying information
        double rmax = tab.p[pw].cwiseAbs().maxCoeff();
        for (int k = -tau; k < i; ++k)
          rmax = std::max(rmax, tab.pb[i - 1 - k].cwiseAbs().maxCoeff());
        const double cut = 1e-14 * rmax;
        for (Index j = 0; j < n; ++j)
          if (std::abs(tab.p[pw][j]) > cut) db.coeff(j, tab.p[pw][j]);
        for (int k = -tau; k < i; ++k) {
          const Vector& pc = tab.pb[i - 1 - k];
          const Index off = u_off(k);
          for (Index j = 0; j < m; ++j)
            if (std::abs(pc[j]) > cut) db.coeff(off + j, pc[j]);
        }
        // rows of the window start carry the hull and must stay
        db.finish_row(fam_rhs[f], /*eliminable=*/i > -tau);
      }
      // control membership
      for (Index r = 0; r < U.num_rows(); ++r) {
        const Index off = u_off(i);
        for (Index j = 0; j < m; ++j) db.coeff(off + j, U.H(r, j));
        db.finish_row(U.b[r]);
      }
    }
    // disturbance membership
    for (int j = 0; j < tau; ++j) {
      const Index off = w_off(j);
      if (mw_eff > 0) {
        for (Index r = 0; r < W.num_rows(); ++r) {
          for (Index k = 0; k < mw_eff; ++k) db.coeff(off + k, W.H(r, k));
          db.finish_row(W.b[r]);
        }
      }
      if (p_eff > 0) {
        for (Index r = 0; r < V.num_rows(); ++r) {
          for (Index k = 0; k < p_eff; ++k) db.coeff(off + mw_eff + k, V.H(r, k));
          db.finish_row(V.b[r]);
        }
      }
    }
  }

  Vector condensed_objective(const Vector& theta) const {
    if (theta.size() != nf + n) throw Error("delta2: theta dimension mismatch");
    Vector c = Vector::Zero(nv);
    // objective coefficient rows q_j = theta' A_eps^{tau-1-j}, built by the
    // recursion q_{j-1} = q_j A_eps; never forms a power of A_eps
    std::vector<Vector> cx(tau), cu(tau), cw(tau);
    Vector q = theta;
    for (int j = tau - 1; j >= 0; --j) {
      const Vector cr = B_eps.transpose() * q;
      cx[j] = cr.head(n);
      cu[j] = cr.tail(m);
      cw[j] = G_eps.transpose() * q;
      if (j > 0) q = At * q;
    }
    // condense the state contributions onto (x0, controls)
    Vector s = Vector::Zero(n);
    for (int j = tau - 1; j >= -tau; --j) {
      Vector cu_total = B.transpose() * s;
      if (j >= 0) cu_total += cu[j];
      c.segment(u_off(j), m) = cu_total;
      s = A.transpose() * s;
      if (j >= 0) s += cx[j];
    }
    c.head(n) = s;
    for (int j = 0; j < tau; ++j) {
      if (mw_eff > 0) c.segment(w_off(j), mw_eff) = cw[j].head(mw_eff);
      if (p_eff > 0) c.segment(w_off(j) + mw_eff, p_eff) = cw[j].tail(p);
    }
    return c;
  }

  double solve(const Vector& theta) {
    const Vector c = condensed_objective(theta);
    if (!simplex) {
      simplex.emplace(db.build(c, lp_opts));
      solved_once = false;
    }
    const SolveStatus st = solved_once ? simplex->resolve_with_rhs(c) : simplex->solve();
    solved_once = true;
    return interpret_cf(st, "delta2");
  }
};

Delta2Solver::Delta2Solver(const ErrorSystem& err, const StateSpaceModel& rom, const Polytope& Xbar,
                           const Polytope& Z, const Polytope& U, const Polytope& W,
                           const Polytope& V, int tau, solvers::LpOptions lp_opts)
    : impl_(std::make_unique<Impl>(err, rom, Xbar, Z, U, W, V, tau, lp_opts)) {}
Delta2Solver::~Delta2Solver() = default;
Delta2Solver::Delta2Solver(Delta2Solver&&) noexcept = default;

double Delta2Solver::solve(const Vector& theta) { return impl_->solve(theta); }

double delta2(const ErrorSystem& err, const Vector& theta, const StateSpaceModel& rom,
              const Polytope& Xbar, const Polytope& Z, const Polytope& U, const Polytope& W,
              const Polytope& V, int tau) {
  Delta2Solver solver(err, rom, Xbar, Z, U, W, V, tau);
  return solver.solve(theta);
}

// ---------------------------------------------------------------------------
// Delta2 (continuous time, trapezoid quadrature)

struct CtDelta2Solver::Impl {
  Index nf, n, m, p;
  Index mw_eff, p_eff;
  int Ns;
  double dt;
  Index nv;
  Matrix Ad, Bd;
  Matrix E_dt;  // e^{A_eps dt}
  Matrix B_eps, G_eps;
  std::optional<RevisedSimplex> simplex;
  solvers::LpOptions lp_opts;
  bool solved_once = false;
  DualBuilder db;

  Index u_off(int i) const { return n + static_cast<Index>(i + Ns) * m; }
  Index w_off(int j) const {
    return n + static_cast<Index>(2 * Ns + 1) * m + static_cast<Index>(j) * (mw_eff + p_eff);
  }

  Impl(const ErrorSystem& err, const StateSpaceModel& rom_d, const Polytope& Xbar,
       const Polytope& Z, const Polytope& U, const Polytope& W, const Polytope& V,
       double tau_seconds, double dt_in, solvers::LpOptions opts)
      : nf(err.nf), n(err.n), m(err.m), p(err.p), mw_eff(0), p_eff(0), dt(dt_in),
        Ad(rom_d.A), Bd(rom_d.B), B_eps(err.B_eps), G_eps(err.G_eps), lp_opts(opts), db(0) {
    if (err.time_domain != TimeDomain::Continuous)
      throw Error("ct_delta2: error system must be continuous-time");
    if (!rom_d.is_discrete()) throw Error("ct_delta2: rom_d must be the ZOH-discretized model");
    if (dt <= 0.0) throw Error("ct_delta2: dt must be positive");
    const double ratio = tau_seconds / dt;
    Ns = static_cast<int>(std::llround(ratio));
    if (Ns < 1 || std::abs(ratio - Ns) > 1e-9 * std::max(1.0, ratio))
      throw Error("ct_delta2: dt must divide tau");
    if (err.dim() > 2000) throw Error("ct_delta2: matrix exponential capped at 2000 states");

    E_dt = linalg::matrix_exponential(err.dense_A(), dt);

    const bool drop_w = (err.mw == 0) || W.is_zero_singleton();
    const bool drop_v = V.is_zero_singleton();
    mw_eff = drop_w ? 0 : err.mw;
    p_eff = drop_v ? 0 : p;

    nv = n + (2 * Ns + 1) * m + (Ns + 1) * (mw_eff + p_eff);
    db = DualBuilder(nv);
    {
      const auto [xlo, xhi] = coordinate_bounds(Xbar);
      for (Index j = 0; j < n; ++j) db.set_hull(j, xlo[j], xhi[j]);
      const auto [ulo, uhi] = coordinate_bounds(U);
      for (int i = -Ns; i <= Ns; ++i)
        for (Index j = 0; j < m; ++j) db.set_hull(u_off(i) + j, ulo[j], uhi[j]);
      if (mw_eff > 0 || p_eff > 0) {
        Vector wlo, whi, vlo, vhi;
        if (mw_eff > 0) std::tie(wlo, whi) = coordinate_bounds(W);
        if (p_eff > 0) std::tie(vlo, vhi) = coordinate_bounds(V);
        for (int jj = 0; jj <= Ns; ++jj) {
          for (Index kk = 0; kk < mw_eff; ++kk) db.set_hull(w_off(jj) + kk, wlo[kk], whi[kk]);
          for (Index kk = 0; kk < p_eff; ++kk)
            db.set_hull(w_off(jj) + mw_eff + kk, vlo[kk], vhi[kk]);
        }
      }
    }

    const int max_pow = 2 * Ns;
    std::vector<FamilyTable> fams;
    std::vector<double> fam_rhs;
    for (Index r = 0; r < Xbar.num_rows(); ++r) {
      fams.push_back(build_family(Xbar.H.row(r).transpose(), Ad, Bd, max_pow));
      fam_rhs.push_back(Xbar.b[r]);
    }
    const Matrix HzH = Z.H * rom_d.H;
    for (Index r = 0; r < HzH.rows(); ++r) {
      fams.push_back(build_family(HzH.row(r).transpose(), Ad, Bd, max_pow));
      fam_rhs.push_back(Z.b[r]);
    }

    for (int i = -Ns; i <= Ns; ++i) {
      const int pw = i + Ns;
      for (std::size_t f = 0; f < fams.size(); ++f) {
        const auto& tab = fams[f];
        double rmax = tab.p[pw].cwiseAbs().maxCoeff();
        for (int k = -Ns; k < i; ++k)
          rmax = std::max(rmax, tab.pb[i - 1 - k].cwiseAbs().maxCoeff());
        const double cut = 1e-14 * rmax;
        for (Index j = 0; j < n; ++j)
          if (std::abs(tab.p[pw][j]) > cut) db.coeff(j, tab.p[pw][j]);
        for (int k = -Ns; k < i; ++k) {
          const Vector& pc = tab.pb[i - 1 - k];
          const Index off = u_off(k);
          for (Index j = 0; j < m; ++j)
            if (std::abs(pc[j]) > cut) db.coeff(off + j, pc[j]);
        }
        db.finish_row(fam_rhs[f], /*eliminable=*/i > -Ns);
      }
      for (Index r = 0; r < U.num_rows(); ++r) {
        const Index off = u_off(i);
        for (Index j = 0; j < m; ++j) db.coeff(off + j, U.H(r, j));
        db.finish_row(U.b[r]);
      }
    }
    for (int j = 0; j <= Ns; ++j) {
      const Index off = w_off(j);
      if (mw_eff > 0) {
        for (Index r = 0; r < W.num_rows(); ++r) {
          for (Index k = 0; k < mw_eff; ++k) db.coeff(off + k, W.H(r, k));
          db.finish_row(W.b[r]);
        }
      }
      if (p_eff > 0) {
        for (Index r = 0; r < V.num_rows(); ++r) {
          for (Index k = 0; k < p_eff; ++k) db.coeff(off + mw_eff + k, V.H(r, k));
          db.finish_row(V.b[r]);
        }
      }
    }
  }

  Vector condensed_objective(const Vector& theta) const {
    if (theta.size() != nf + n) throw Error("ct_delta2: theta dimension mismatch");
    Vector c = Vector::Zero(nv);
    // quadrature nodes s_j = tau - j dt; trapezoid weights
    std::vector<Vector> cx(Ns + 1), cu(Ns + 1), cw(Ns + 1);
    Vector t = theta;  // t_j = theta' e^{A_eps (tau - j dt)}, backward from j = Ns
    for (int j = Ns; j >= 0; --j) {
      const double wq = (j == 0 || j == Ns) ? 0.5 * dt : dt;
      const Vector cr = B_eps.transpose() * t * wq;
      cx[j] = cr.head(n);
      cu[j] = cr.tail(m);
      cw[j] = G_eps.transpose() * t * wq;
      if (j > 0) t = E_dt.transpose() * t;
    }
    Vector s = Vector::Zero(n);
    for (int j = Ns; j >= -Ns; --j) {
      Vector cu_total = Bd.transpose() * s;
      if (j >= 0) cu_total += cu[j];
      c.segment(u_off(j), m) = cu_total;
      s = Ad.transpose() * s;
      if (j >= 0) s += cx[j];
    }
    c.head(n) = s;
    for (int j = 0; j <= Ns; ++j) {
      if (mw_eff > 0) c.segment(w_off(j), mw_eff) = cw[j].head(mw_eff);
      if (p_eff > 0) c.segment(w_off(j) + mw_eff, p_eff) = cw[j].tail(p);
    }
    return c;
  }

  double solve(const Vector& theta) {
    const Vector c = condensed_objective(theta);
    if (!simplex) {
      simplex.emplace(db.build(c, lp_opts));
      solved_once = false;
    }
    const SolveStatus st = solved_once ? simplex->resolve_with_rhs(c) : simplex->solve();
    solved_once = true;
    return interpret_cf(st, "ct_delta2");
  }
};

CtDelta2Solver::CtDelta2Solver(const ErrorSystem& err_ct, const StateSpaceModel& rom_d,
                               const Polytope& Xbar, const Polytope& Z, const Polytope& U,
                               const Polytope& W, const Polytope& V, double tau_seconds, double dt,
                               solvers::LpOptions lp_opts)
    : impl_(std::make_unique<Impl>(err_ct, rom_d, Xbar, Z, U, W, V, tau_seconds, dt, lp_opts)) {}
CtDelta2Solver::~CtDelta2Solver() = default;
CtDelta2Solver::CtDelta2Solver(CtDelta2Solver&&) noexcept = default;

double CtDelta2Solver::solve(const Vector& theta) { return impl_->solve(theta); }

double ct_delta2(const ErrorSystem& err_ct, const Vector& theta, const StateSpaceModel& rom_d,
                 const Polytope& Xbar, const Polytope& Z, const Polytope& U, const Polytope& W,
                 const Polytope& V, double tau_seconds, double dt) {
  CtDelta2Solver solver(err_ct, rom_d, Xbar, Z, U, W, V, tau_seconds, dt);
  return solver.solve(theta);
}

// ---------------------------------------------------------------------------

BoundReport combine_bounds(double delta1_value, bool delta1_skipped, const DecayParameters& params,
                           const ErrorSystem& err, const Vector& delta2_z, const Vector& delta2_u,
                           const Polytope& Z, const Polytope& U) {
  if (delta2_z.size() != err.E_z.rows() || delta2_u.size() != err.E_u.rows())
    throw Error("combine_bounds: a recent-window bound is missing for some constraint row");

  BoundReport rep;
  rep.delta1_value = delta1_skipped ? 0.0 : delta1_value;
  rep.delta1_skipped = delta1_skipped;
  rep.delta2_z = delta2_z;
  rep.delta2_u = delta2_u;
  rep.M = params.M;
  rep.gamma = params.gamma;

  const Index nz = err.E_z.rows(), nu = err.E_u.rows();
  rep.delta_z.resize(nz);
  rep.delta_u.resize(nu);
  double r_max = 0.0;
  auto combine_row = [&](const Vector& theta, double d2, double b) {
    const double w1 = delta1_skipped ? 0.0 : params.row_weight(theta) * delta1_value;
    if (b > 0.0) r_max = std::max(r_max, 100.0 * w1 / b);
    return w1 + d2;
  };
  for (Index i = 0; i < nz; ++i)
    rep.delta_z[i] = combine_row(err.E_z.row(i).transpose(), delta2_z[i], Z.b[i]);
  for (Index i = 0; i < nu; ++i)
    rep.delta_u[i] = combine_row(err.E_u.row(i).transpose(), delta2_u[i], U.b[i]);
  rep.r_percent = r_max;

  auto minmax_percent = [](const Vector& delta, const Vector& b, double& tmax, double& tmin) {
    tmax = 0.0;
    tmin = std::numeric_limits<double>::infinity();
    for (Index i = 0; i < delta.size(); ++i) {
      const double pct = (b[i] > 0.0) ? 100.0 * delta[i] / b[i]
                                      : std::numeric_limits<double>::infinity();
      tmax = std::max(tmax, pct);
      tmin = std::min(tmin, pct);
    }
    if (delta.size() == 0) tmin = 0.0;
  };
  minmax_percent(rep.delta_z, Z.b, rep.tz_max, rep.tz_min);
  minmax_percent(rep.delta_u, U.b, rep.tu_max, rep.tu_min);
  return rep;
}

std::vector<double> norm_decay_profile(const ErrorSystem& err, int t_max) {
  if (t_max < 0) throw Error("norm_decay_profile: t_max must be nonnegative");
  Matrix E(err.E_z.rows() + err.E_u.rows(), err.dim());
  E << err.E_z, err.E_u;
  std::vector<double> profile;
  profile.reserve(t_max + 1);
  Matrix R = E;
  for (int t = 0; t <= t_max; ++t) {
    profile.push_back(spectral_norm(R * err.B_eps));
    if (t < t_max) R = R * err.A_eps;
  }
  return profile;
}

int tau_for_threshold(const std::vector<double>& profile, double threshold) {
  for (std::size_t t = 0; t < profile.size(); ++t)
    if (profile[t] <= threshold) return static_cast<int>(t);
  return -1;
}

BoundReport error_bounds(const ErrorSystem& err, const StateSpaceModel& rom, const Polytope& Z,
                         const Polytope& U, const Polytope& W, const Polytope& V,
                         const BoundsOptions& opts, DecayParameters* params_out) {
  if (err.time_domain != TimeDomain::Discrete)
    throw Error("error_bounds: discrete-time error system required");
  const int i_bar = (opts.i_bar > 0) ? opts.i_bar : opts.tau;
  const Polytope Xbar = compute_xbar(rom, Z, U, i_bar, opts.lp);

  DecayParameters params;
  double d1 = 0.0;
  double C_r = 0.0, C_w = 0.0;
  if (!opts.skip_delta1) {
    if (err.dim() > 2000)
      throw Error("error_bounds: dense decay-certificate computation capped at 2000 states; "
                  "enable skip_delta1 for larger problems");
    params = compute_decay_params(err.dense_A(), opts.method, opts.eta);
    std::tie(C_r, C_w) = compute_cr_cw(err, Xbar, U, W, V, params);
    d1 = delta1(params, opts.eta_init, opts.tau, C_r, C_w);
    if (params_out) *params_out = params;
  } else {
    params.M = 1.0;
    params.gamma = 0.0;
    log::info("error_bounds: tail term waived by the large-tau argument; bounds are "
              "recent-window only");
  }

  // one dual chain per job, rows dealt round-robin
  const Index nz = err.E_z.rows(), nu = err.E_u.rows();
  Vector d2z(nz), d2u(nu);
  std::vector<Vector> thetas;
  for (Index i = 0; i < nz; ++i) thetas.push_back(err.E_z.row(i).transpose());
  for (Index i = 0; i < nu; ++i) thetas.push_back(err.E_u.row(i).transpose());
  std::vector<double> results(thetas.size(), 0.0);

  const int jobs = std::max(1, std::min<int>(opts.jobs, static_cast<int>(thetas.size())));
  auto run_chain = [&](int chain) {
    Delta2Solver solver(err, rom, Xbar, Z, U, W, V, opts.tau, opts.lp);
    for (std::size_t k = chain; k < thetas.size(); k += jobs) results[k] = solver.solve(thetas[k]);
  };
  if (jobs == 1) {
    run_chain(0);
  } else {
    std::vector<std::thread> pool;
    for (int c = 0; c < jobs; ++c) pool.emplace_back(run_chain, c);
    for (auto& t : pool) t.join();
  }
  for (Index i = 0; i < nz; ++i) d2z[i] = results[i];
  for (Index i = 0; i < nu; ++i) d2u[i] = results[nz + i];

  BoundReport rep = combine_bounds(d1, opts.skip_delta1, params, err, d2z, d2u, Z, U);
  rep.C_r = C_r;
  rep.C_w = C_w;
  rep.tau = opts.tau;
  rep.decay_profile = norm_decay_profile(err, opts.profile_t_max > 0 ? opts.profile_t_max : 2 * opts.tau);
  return rep;
}

}  // namespace rompc::bounds
