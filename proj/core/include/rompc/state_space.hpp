#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace rompc {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Base error type for all failures surfaced by this library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

enum class TimeDomain { Discrete, Continuous };

/// Linear time-invariant system
///
///   discrete:    x+ = A x + B u + Bw w,   y = C x + v,   z = H x
///   continuous:  dx = A x + B u + Bw w,   y = C x + v,   z = H x
///
/// Used for the full order plant and for reduced order models alike.
/// Bw may have zero columns (no process disturbance).
struct StateSpaceModel {
  Matrix A;
  Matrix B;
  Matrix Bw;
  Matrix C;
  Matrix H;
  TimeDomain time_domain = TimeDomain::Discrete;
  double dt = 0.0;  // sampling period [s], meaningful when discrete

  Index n() const { return A.rows(); }
  Index m() const { return B.cols(); }
  Index p() const { return C.rows(); }
  Index o() const { return H.rows(); }
  Index mw() const { return Bw.cols(); }

  bool is_discrete() const { return time_domain == TimeDomain::Discrete; }

  /// Checks mutual dimension consistency and dt > 0 for discrete systems.
  /// Throws Error on violation.
  void validate() const;
};

}  // namespace rompc
