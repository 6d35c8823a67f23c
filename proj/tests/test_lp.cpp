#include <doctest.h>

#include "rompc/lp.hpp"
#include "test_utils.hpp"

using namespace rompc;
using namespace rompc::solvers;
using testutil::random_matrix;
using testutil::random_vector;

namespace {

LinearProgram box_lp(const Vector& c, const Vector& lo, const Vector& hi) {
  const Index d = c.size();
  LinearProgram lp;
  lp.c = c;
  lp.A_ineq.resize(2 * d, d);
  lp.A_ineq << Matrix::Identity(d, d), -Matrix::Identity(d, d);
  lp.b_ineq.resize(2 * d);
  lp.b_ineq << hi, -lo;
  return lp;
}

}  // namespace

TEST_CASE("interval maximization") {
  LinearProgram lp;
  lp.c = Vector::Ones(1);
  lp.A_ineq.resize(2, 1);
  lp.A_ineq << 1, -1;
  lp.b_ineq.resize(2);
  lp.b_ineq << 2, 1;  // x <= 2, -x <= 1
  const SolveStatus st = solve_lp(lp);
  REQUIRE(st.status == SolveResult::Optimal);
  CHECK(st.objective == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(st.x[0] == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("half line is unbounded") {
  LinearProgram lp;
  lp.c = Vector::Ones(1);
  lp.A_ineq.resize(1, 1);
  lp.A_ineq << -1;
  lp.b_ineq = Vector::Zero(1);  // x >= 0
  CHECK(solve_lp(lp).status == SolveResult::Unbounded);
}

TEST_CASE("degenerate optimal face") {
  LinearProgram lp;
  lp.c = Vector::Ones(2);
  lp.A_ineq.resize(3, 2);
  lp.A_ineq << 1, 1, -1, 0, 0, -1;
  lp.b_ineq.resize(3);
  lp.b_ineq << 1, 0, 0;
  const SolveStatus st = solve_lp(lp);
  REQUIRE(st.status == SolveResult::Optimal);
  CHECK(st.objective == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("infeasible detection") {
  LinearProgram lp;
  lp.c = Vector::Ones(1);
  lp.A_ineq.resize(2, 1);
  lp.A_ineq << 1, -1;
  lp.b_ineq.resize(2);
  lp.b_ineq << -1, 0;  // x <= -1 and x >= 0
  CHECK(solve_lp(lp).status == SolveResult::Infeasible);
}

TEST_CASE("equality constraints and bounds") {
  // max x + 2y s.t. x + y = 1, 0 <= x,y <= 1  ->  y = 1, x = 0
  LinearProgram lp;
  lp.c.resize(2);
  lp.c << 1, 2;
  lp.A_eq.resize(1, 2);
  lp.A_eq << 1, 1;
  lp.b_eq = Vector::Ones(1);
  lp.lb = Vector::Zero(2);
  lp.ub = Vector::Ones(2);
  const SolveStatus st = solve_lp(lp);
  REQUIRE(st.status == SolveResult::Optimal);
  CHECK(st.objective == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(st.x[1] == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("box problems match brute-force vertex maxima exactly") {
  auto gen = testutil::rng(7);
  std::uniform_int_distribution<int> dims(1, 8);
  for (int trial = 0; trial < 60; ++trial) {
    const Index d = dims(gen);
    Vector lo = random_vector(gen, d), hi = lo;
    for (Index i = 0; i < d; ++i) hi[i] = lo[i] + 0.1 + std::abs(random_vector(gen, 1)[0]);
    const Vector c = random_vector(gen, d);
    const SolveStatus st = solve_lp(box_lp(c, lo, hi));
    REQUIRE(st.status == SolveResult::Optimal);
    // brute force over all vertices
    double best = -1e300;
    for (long mask = 0; mask < (1L << d); ++mask) {
      double v = 0.0;
      for (Index i = 0; i < d; ++i) v += c[i] * ((mask >> i) & 1 ? hi[i] : lo[i]);
      best = std::max(best, v);
    }
    CHECK(st.objective == doctest::Approx(best).epsilon(1e-9));
  }
}

TEST_CASE("strong duality on random feasible bounded LPs") {
  auto gen = testutil::rng(13);
  for (int trial = 0; trial < 100; ++trial) {
    const Index n = 2 + trial % 5;
    const Index m = 3 + trial % 7;
    const Matrix A = random_matrix(gen, m, n);
    const Vector x0 = random_vector(gen, n);
    Vector b = A * x0;
    b.array() += 0.3;  // interior feasible point
    const Vector c = random_vector(gen, n);

    // primal with a bounding box so the optimum is finite
    LinearProgram primal;
    primal.c = c;
    primal.A_ineq.resize(m + 2 * n, n);
    primal.A_ineq << A, Matrix::Identity(n, n), -Matrix::Identity(n, n);
    primal.b_ineq.resize(m + 2 * n);
    primal.b_ineq << b, Vector::Constant(n, 10.0 + x0.cwiseAbs().maxCoeff()),
        Vector::Constant(n, 10.0 + x0.cwiseAbs().maxCoeff());
    const SolveStatus ps = solve_lp(primal);
    REQUIRE(ps.status == SolveResult::Optimal);

    // dual: min b'y s.t. A'y = c, y >= 0 (with the box rows included)
    const Index mm = m + 2 * n;
    LinearProgram dual;
    dual.c = -primal.b_ineq;
    dual.A_eq = primal.A_ineq.transpose();
    dual.b_eq = c;
    dual.lb = Vector::Zero(mm);
    const SolveStatus ds = solve_lp(dual);
    REQUIRE(ds.status == SolveResult::Optimal);
    CHECK(ps.objective == doctest::Approx(-ds.objective).epsilon(1e-6));
  }
}

TEST_CASE("computational form: resolve_with_rhs matches cold solves") {
  auto gen = testutil::rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    const Index nr = 5 + trial % 6;
    const Index ncols = nr * 4;
    Matrix Md = random_matrix(gen, nr, ncols);
    // nonnegative costs keep the minimization bounded
    Vector gamma = random_vector(gen, ncols).cwiseAbs();
    Eigen::SparseMatrix<double> M = Md.sparseView();

    auto feasible_rhs = [&]() {
      Vector w = random_vector(gen, ncols).cwiseAbs();
      return Vector(Md * w);
    };

    const Vector d1 = feasible_rhs();
    RevisedSimplex warm(M, d1, gamma);
    const SolveStatus s1 = warm.solve();
    REQUIRE(s1.status == SolveResult::Optimal);
    {
      RevisedSimplex cold(M, d1, gamma);
      CHECK(cold.solve().objective == doctest::Approx(s1.objective).epsilon(1e-8));
    }
    for (int round = 0; round < 4; ++round) {
      const Vector d2 = feasible_rhs();
      const SolveStatus sw = warm.resolve_with_rhs(d2);
      REQUIRE(sw.status == SolveResult::Optimal);
      RevisedSimplex cold(M, d2, gamma);
      const SolveStatus sc = cold.solve();
      REQUIRE(sc.status == SolveResult::Optimal);
      CHECK(sw.objective == doctest::Approx(sc.objective).epsilon(1e-8));
    }
  }
}

TEST_CASE("computational form multipliers solve the inequality-form primal") {
  // build the dual of max c'x s.t. Ax <= b explicitly and read x off the
  // multipliers
  auto gen = testutil::rng(19);
  for (int trial = 0; trial < 20; ++trial) {
    const Index n = 2 + trial % 4;
    Vector lo = random_vector(gen, n), hi = lo;
    for (Index i = 0; i < n; ++i) hi[i] = lo[i] + 0.5 + std::abs(random_vector(gen, 1)[0]);
    const Vector c = random_vector(gen, n);
    LinearProgram primal = box_lp(c, lo, hi);

    const Index q = primal.A_ineq.rows();
    Eigen::SparseMatrix<double> M = Matrix(primal.A_ineq.transpose()).sparseView();
    RevisedSimplex dual(M, c, primal.b_ineq);
    const SolveStatus st = dual.solve();
    REQUIRE(st.status == SolveResult::Optimal);
    (void)q;

    const SolveStatus ps = solve_lp(primal);
    CHECK(st.objective == doctest::Approx(ps.objective).epsilon(1e-8));
    const Vector x = dual.multipliers();
    CHECK((primal.A_ineq * x - primal.b_ineq).maxCoeff() <= 1e-7);
    CHECK(c.dot(x) == doctest::Approx(ps.objective).epsilon(1e-7));
  }
}

TEST_CASE("zero objective and empty constraint edge cases") {
  LinearProgram lp;
  lp.c = Vector::Zero(2);
  const SolveStatus st = solve_lp(lp);
  REQUIRE(st.status == SolveResult::Optimal);
  CHECK(st.objective == doctest::Approx(0.0));

  lp.c = Vector::Ones(2);
  CHECK(solve_lp(lp).status == SolveResult::Unbounded);
}
