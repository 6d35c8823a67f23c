#pragma once

#include <optional>
#include <string>
#include <vector>

#include "rompc/state_space.hpp"

namespace rompc::geometry {

/// Thrown by support_max when the functional is unbounded over the set.
class UnboundedError : public Error {
 public:
  using Error::Error;
};

/// Convex polytope in halfspace representation { x | H x <= b }.
struct Polytope {
  Matrix H;
  Vector b;
  std::string label;

  Index dim() const { return H.cols(); }
  Index num_rows() const { return H.rows(); }

  /// Axis-aligned box [lo, hi] with rows [I; -I].
  static Polytope box(const Vector& lo, const Vector& hi, std::string label = "");
  static Polytope interval(double lo, double hi, std::string label = "");
  /// The singleton {0} as a zero-width box; stands in for "no disturbance".
  static Polytope origin_point(Index d, std::string label = "");

  /// Recovers per-coordinate bounds when the rows are (scaled) +-e_i and
  /// every coordinate is bounded both ways. General rows return nullopt.
  std::optional<std::pair<Vector, Vector>> as_box() const;

  bool is_zero_singleton(double tol = 0.0) const;

  void validate() const;
};

bool contains(const Polytope& S, const Vector& x, double tol = 0.0);

struct TightenInfo {
  bool empty_warning = false;
  bool origin_excluded_warning = false;
};

/// { x | H x <= b - delta }. Requires delta >= 0 of matching length. Emits
/// warnings (never errors) when the result is empty or excludes the origin.
Polytope tighten(const Polytope& S, const Vector& delta, TightenInfo* info = nullptr);

/// max c'x over S via LP. Throws UnboundedError / Error (infeasible S).
double support_max(const Vector& c, const Polytope& S);

/// Every coordinate direction bounded (checked by 2*dim support LPs).
bool is_compact(const Polytope& S);

/// Vertices of a bounded polytope. Boxes take the 2^d fast path; general
/// polytopes go through basis enumeration (dimension cap 8). Throws when the
/// count would exceed `cap`.
std::vector<Vector> enumerate_vertices(const Polytope& S, std::size_t cap = (1u << 20));

/// max over s in S1 x S2 x ... of || M s ||_G  with G symmetric positive
/// definite. Exact: the maximum of a convex function over a polytope is
/// attained at a vertex, and product-set vertices are the cartesian product
/// of factor vertices.
double weighted_norm_max(const Matrix& M, const Matrix& G,
                         const std::vector<const Polytope*>& factors,
                         std::size_t vertex_cap = (1u << 20));
double weighted_norm_max(const Matrix& M, const Matrix& G, const Polytope& S,
                         std::size_t vertex_cap = (1u << 20));

}  // namespace rompc::geometry
