#include "rompc/polytope.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>

#include "rompc/log.hpp"
#include "rompc/lp.hpp"

namespace rompc::geometry {

Polytope Polytope::box(const Vector& lo, const Vector& hi, std::string label) {
  const Index d = lo.size();
  if (hi.size() != d) throw Error("Polytope::box: bound size mismatch");
  for (Index i = 0; i < d; ++i)
    if (lo[i] > hi[i]) throw Error("Polytope::box: lo exceeds hi in coordinate " + std::to_string(i));
  Polytope S;
  S.H.resize(2 * d, d);
  S.H << Matrix::Identity(d, d), -Matrix::Identity(d, d);
  S.b.resize(2 * d);
  S.b << hi, -lo;
  S.label = std::move(label);
  return S;
}

Polytope Polytope::interval(double lo, double hi, std::string label) {
  return box(Vector::Constant(1, lo), Vector::Constant(1, hi), std::move(label));
}

Polytope Polytope::origin_point(Index d, std::string label) {
  return box(Vector::Zero(d), Vector::Zero(d), std::move(label));
}

std::optional<std::pair<Vector, Vector>> Polytope::as_box() const {
  const Index d = dim();
  Vector lo = Vector::Constant(d, -std::numeric_limits<double>::infinity());
  Vector hi = Vector::Constant(d, std::numeric_limits<double>::infinity());
  for (Index r = 0; r < num_rows(); ++r) {
    Index nz = -1;
    for (Index j = 0; j < d; ++j) {
      if (H(r, j) != 0.0) {
        if (nz >= 0) return std::nullopt;  // general row
        nz = j;
      }
    }
    if (nz < 0) {
      if (b[r] < 0) return std::nullopt;  // 0 <= negative: empty set row
      continue;
    }
    const double coef = H(r, nz);
    if (coef > 0)
      hi[nz] = std::min(hi[nz], b[r] / coef);
    else
      lo[nz] = std::max(lo[nz], b[r] / coef);
  }
  for (Index j = 0; j < d; ++j)
    if (!std::isfinite(lo[j]) || !std::isfinite(hi[j]) || lo[j] > hi[j]) return std::nullopt;
  return std::make_pair(lo, hi);
}

bool Polytope::is_zero_singleton(double tol) const {
  const auto bx = as_box();
  if (!bx) return false;
  return bx->first.cwiseAbs().maxCoeff() <= tol && bx->second.cwiseAbs().maxCoeff() <= tol;
}

void Polytope::validate() const {
  if (H.rows() != b.size()) throw Error("Polytope: H/b row mismatch");
  if (!H.allFinite() || !b.allFinite()) throw Error("Polytope: non-finite entries");
}

bool contains(const Polytope& S, const Vector& x, double tol) {
  if (x.size() != S.dim()) throw Error("contains: dimension mismatch");
  for (Index r = 0; r < S.num_rows(); ++r) {
    const double lhs = S.H.row(r).dot(x);
    if (lhs > S.b[r] + tol * (1.0 + std::abs(S.b[r]))) return false;
  }
  return true;
}

Polytope tighten(const Polytope& S, const Vector& delta, TightenInfo* info) {
  if (delta.size() != S.num_rows()) throw Error("tighten: delta length mismatch");
  if (delta.minCoeff() < 0.0) throw Error("tighten: negative tightening entry");
  Polytope T = S;
  T.b -= delta;
  TightenInfo local;
  if (!contains(T, Vector::Zero(S.dim()), 0.0)) {
    local.origin_excluded_warning = true;
    log::warn("tighten: tightened set '" + S.label + "' no longer contains the origin");
    // emptiness only worth checking once the origin is out
    bool feasible = true;
    try {
      for (Index j = 0; j < S.dim() && feasible; ++j) {
        Vector c = Vector::Zero(S.dim());
        c[j] = 1.0;
        support_max(c, T);
      }
    } catch (const UnboundedError&) {
      // unbounded is still nonempty
    } catch (const Error&) {
      feasible = false;
    }
    if (!feasible) {
      local.empty_warning = true;
      log::warn("tighten: tightened set '" + S.label + "' is empty");
    }
  }
  if (info) *info = local;
  return T;
}

double support_max(const Vector& c, const Polytope& S) {
  if (c.size() != S.dim()) throw Error("support_max: dimension mismatch");
  solvers::LinearProgram lp;
  lp.c = c;
  lp.A_ineq = S.H;
  lp.b_ineq = S.b;
  const solvers::SolveStatus st = solvers::solve_lp(lp);
  switch (st.status) {
    case solvers::SolveResult::Optimal:
      return st.objective;
    case solvers::SolveResult::Unbounded:
      throw UnboundedError("support_max: functional unbounded over '" + S.label + "'");
    case solvers::SolveResult::Infeasible:
      throw Error("support_max: set '" + S.label + "' is empty");
    default:
      throw Error("support_max: LP iteration cap reached");
  }
}

bool is_compact(const Polytope& S) {
  for (Index j = 0; j < S.dim(); ++j) {
    Vector c = Vector::Zero(S.dim());
    for (const double sign : {1.0, -1.0}) {
      c[j] = sign;
      try {
        support_max(c, S);
      } catch (const UnboundedError&) {
        return false;
      }
    }
  }
  return true;
}

namespace {

std::vector<Vector> box_vertices(const Vector& lo, const Vector& hi, std::size_t cap) {
  const Index d = lo.size();
  // collapse zero-width coordinates so singleton factors do not inflate counts
  std::vector<Index> active;
  for (Index i = 0; i < d; ++i)
    if (hi[i] > lo[i]) active.push_back(i);
  const std::size_t count = std::size_t{1} << active.size();
  if (active.size() >= 63 || count > cap)
    throw Error("enumerate_vertices: vertex cap exceeded; decompose the set into factors or use a box over-approximation");
  std::vector<Vector> verts;
  verts.reserve(count);
  for (std::size_t mask = 0; mask < count; ++mask) {
    Vector v = lo;
    for (std::size_t k = 0; k < active.size(); ++k)
      if ((mask >> k) & 1) v[active[k]] = hi[active[k]];
    verts.push_back(std::move(v));
  }
  return verts;
}

// Basis enumeration for general bounded low-dimensional polytopes: every
// vertex is the solution of d active rows.
std::vector<Vector> general_vertices(const Polytope& S, std::size_t cap) {
  const Index d = S.dim();
  const Index q = S.num_rows();
  if (d > 8)
    throw Error("enumerate_vertices: general polytopes supported up to dimension 8; got " + std::to_string(d));
  std::vector<Vector> verts;
  std::vector<Index> idx(d);
  const double scale = 1.0 + S.b.cwiseAbs().maxCoeff();

  // iterate over all d-subsets of rows
  std::vector<Index> comb(d);
  for (Index i = 0; i < d; ++i) comb[i] = i;
  if (q < d) return verts;
  while (true) {
    Matrix Hs(d, d);
    Vector bs(d);
    for (Index i = 0; i < d; ++i) {
      Hs.row(i) = S.H.row(comb[i]);
      bs[i] = S.b[comb[i]];
    }
    Eigen::FullPivLU<Matrix> lu(Hs);
    if (lu.isInvertible()) {
      const Vector x = lu.solve(bs);
      if (contains(S, x, 1e-9)) {
        bool duplicate = false;
        for (const auto& v : verts)
          if ((v - x).cwiseAbs().maxCoeff() <= 1e-8 * scale) {
            duplicate = true;
            break;
          }
        if (!duplicate) {
          if (verts.size() >= cap)
            throw Error("enumerate_vertices: vertex cap exceeded; decompose the set into factors or use a box over-approximation");
          verts.push_back(x);
        }
      }
    }
    // next combination
    Index i = d;
    while (i-- > 0) {
      if (comb[i] < q - (d - i)) {
        ++comb[i];
        for (Index j = i + 1; j < d; ++j) comb[j] = comb[j - 1] + 1;
        break;
      }
      if (i == 0) return verts;
    }
  }
}

}  // namespace

std::vector<Vector> enumerate_vertices(const Polytope& S, std::size_t cap) {
  S.validate();
  if (const auto bx = S.as_box()) return box_vertices(bx->first, bx->second, cap);
  if (!is_compact(S)) throw Error("enumerate_vertices: set '" + S.label + "' is unbounded");
  return general_vertices(S, cap);
}

double weighted_norm_max(const Matrix& M, const Matrix& G,
                         const std::vector<const Polytope*>& factors, std::size_t vertex_cap) {
  Index total_dim = 0;
  for (const auto* f : factors) total_dim += f->dim();
  if (M.cols() != total_dim) throw Error("weighted_norm_max: M column mismatch with product set");
  if (G.rows() != M.rows() || G.cols() != M.rows()) throw Error("weighted_norm_max: G dimension mismatch");

  Eigen::LLT<Matrix> llt(G);
  if (llt.info() != Eigen::Success) throw Error("weighted_norm_max: G must be positive definite");
  // |M s|_G = |F M s|_2 with G = F'F; fold the factor into M once
  const Matrix FM = llt.matrixU() * M;

  // per-factor vertex lists; the product enumerates lazily by odometer
  std::vector<std::vector<Vector>> verts;
  verts.reserve(factors.size());
  std::size_t count = 1;
  for (const auto* f : factors) {
    verts.push_back(enumerate_vertices(*f, vertex_cap));
    if (verts.back().empty()) throw Error("weighted_norm_max: factor '" + f->label + "' has no vertices");
    if (count > vertex_cap / verts.back().size() + 1) {
      count = vertex_cap + 1;
    } else {
      count *= verts.back().size();
    }
  }
  if (count > vertex_cap)
    throw Error("weighted_norm_max: vertex cap exceeded; decompose the set into factors or use a box over-approximation");

  std::vector<std::size_t> odo(factors.size(), 0);
  Vector s(total_dim);
  double best = 0.0;
  while (true) {
    Index off = 0;
    for (std::size_t k = 0; k < factors.size(); ++k) {
      s.segment(off, factors[k]->dim()) = verts[k][odo[k]];
      off += factors[k]->dim();
    }
    best = std::max(best, (FM * s).norm());
    std::size_t k = 0;
    for (; k < odo.size(); ++k) {
      if (++odo[k] < verts[k].size()) break;
      odo[k] = 0;
    }
    if (k == odo.size()) break;
  }
  return best;
}

double weighted_norm_max(const Matrix& M, const Matrix& G, const Polytope& S, std::size_t vertex_cap) {
  return weighted_norm_max(M, G, {&S}, vertex_cap);
}

}  // namespace rompc::geometry
