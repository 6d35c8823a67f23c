#include "rompc/state_space.hpp"

namespace rompc {

void StateSpaceModel::validate() const {
  const Index nn = A.rows();
  if (A.cols() != nn) throw Error("state matrix A must be square");
  if (B.rows() != nn) throw Error("dimension mismatch: B has " + std::to_string(B.rows()) + " rows, expected " + std::to_string(nn));
  if (Bw.size() > 0 && Bw.rows() != nn)
    throw Error("dimension mismatch: Bw has " + std::to_string(Bw.rows()) + " rows, expected " + std::to_string(nn));
  if (C.cols() != nn) throw Error("dimension mismatch: C has " + std::to_string(C.cols()) + " cols, expected " + std::to_string(nn));
  if (H.cols() != nn) throw Error("dimension mismatch: H has " + std::to_string(H.cols()) + " cols, expected " + std::to_string(nn));
  if (!A.allFinite() || !B.allFinite() || !C.allFinite() || !H.allFinite() || (Bw.size() > 0 && !Bw.allFinite()))
    throw Error("state-space matrices contain non-finite entries");
  if (is_discrete() && !(dt > 0.0)) throw Error("discrete system requires dt > 0");
}

}  // namespace rompc
