#include <doctest.h>

#include "rompc/polytope.hpp"
#include "test_utils.hpp"

using namespace rompc;
using namespace rompc::geometry;
using testutil::random_matrix;
using testutil::random_vector;

TEST_CASE("contains") {
  const Polytope box = Polytope::box(Vector::Constant(2, -1.0), Vector::Constant(2, 1.0));
  CHECK(contains(box, Vector::Zero(2)));
  Vector x(2);
  x << 1.0 + 1e-3, 0.0;
  CHECK_FALSE(contains(box, x, 0.0));
  x << 1.0 + 1e-10, 0.0;
  CHECK(contains(box, x, 1e-9));
  CHECK_THROWS_AS(contains(box, Vector::Zero(3)), Error);
}

TEST_CASE("tighten") {
  const Polytope box = Polytope::interval(-1.0, 1.0);
  SUBCASE("zero tightening is identity") {
    const Polytope t = tighten(box, Vector::Zero(2));
    CHECK((t.b - box.b).norm() == 0.0);
  }
  SUBCASE("tighten to a point") {
    const Polytope t = tighten(box, Vector::Ones(2));
    CHECK(contains(t, Vector::Zero(1)));
    CHECK_FALSE(contains(t, Vector::Constant(1, 1e-6)));
  }
  SUBCASE("over-tightening warns empty") {
    TightenInfo info;
    tighten(box, box.b + Vector::Constant(2, 0.5), &info);
    CHECK(info.empty_warning);
    CHECK(info.origin_excluded_warning);
  }
  SUBCASE("negative entry rejected") {
    CHECK_THROWS_AS(tighten(box, Vector::Constant(2, -0.1)), Error);
  }
  SUBCASE("composition law") {
    auto gen = testutil::rng(3);
    const Polytope S = Polytope::box(-random_vector(gen, 3).cwiseAbs(), random_vector(gen, 3).cwiseAbs());
    const Vector d1 = 0.01 * random_vector(gen, 6).cwiseAbs();
    const Vector d2 = 0.01 * random_vector(gen, 6).cwiseAbs();
    const Polytope once = tighten(S, d1 + d2);
    const Polytope twice = tighten(tighten(S, d1), d2);
    // equal up to summation order rounding
    CHECK((once.b - twice.b).cwiseAbs().maxCoeff() <= 1e-15 * (1.0 + S.b.cwiseAbs().maxCoeff()));
  }
}

TEST_CASE("tighten containment implication") {
  auto gen = testutil::rng(5);
  const Polytope S = Polytope::box(Vector::Constant(3, -2.0), Vector::Constant(3, 1.5));
  const Vector delta = 0.3 * random_vector(gen, 6).cwiseAbs();
  const Polytope T = tighten(S, delta);
  for (int i = 0; i < 200; ++i) {
    const Vector x = random_vector(gen, 3);
    if (contains(T, x)) CHECK(contains(S, x));
  }
}

TEST_CASE("support_max") {
  const Polytope box = Polytope::box(Vector::Constant(2, -1.0), Vector::Constant(2, 1.0));
  Vector c(2);
  c << 1, 0;
  CHECK(support_max(c, box) == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(support_max(Vector::Zero(2), box) == doctest::Approx(0.0));

  Polytope half;
  half.H = Matrix::Identity(1, 1);
  half.b = Vector::Ones(1);  // x <= 1 only
  c.resize(1);
  c << -1;
  CHECK_THROWS_AS(support_max(c, half), UnboundedError);
  CHECK_FALSE(is_compact(half));
}

TEST_CASE("vertex enumeration on boxes and general polytopes") {
  SUBCASE("unit square") {
    const auto verts = enumerate_vertices(Polytope::box(Vector::Constant(2, -1.0), Vector::Ones(2)));
    CHECK(verts.size() == 4);
  }
  SUBCASE("zero-width coordinates collapse") {
    const auto verts = enumerate_vertices(Polytope::origin_point(3));
    REQUIRE(verts.size() == 1);
    CHECK(verts[0].norm() == 0.0);
  }
  SUBCASE("simplex") {
    // x >= 0, y >= 0, x + y <= 1
    Polytope S;
    S.H.resize(3, 2);
    S.H << -1, 0, 0, -1, 1, 1;
    S.b.resize(3);
    S.b << 0, 0, 1;
    const auto verts = enumerate_vertices(S);
    CHECK(verts.size() == 3);
  }
  SUBCASE("cap exceeded reports decomposition hint") {
    const Polytope big = Polytope::box(Vector::Constant(12, -1.0), Vector::Ones(12));
    CHECK_THROWS_WITH_AS(enumerate_vertices(big, 100), doctest::Contains("decompose"), Error);
  }
}

TEST_CASE("weighted_norm_max basics") {
  const Polytope square = Polytope::box(Vector::Constant(2, -1.0), Vector::Ones(2));
  CHECK(weighted_norm_max(Matrix::Identity(2, 2), Matrix::Identity(2, 2), square) ==
        doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
  Matrix M = Matrix::Zero(2, 2);
  M(0, 0) = 2.0;
  CHECK(weighted_norm_max(M, Matrix::Identity(2, 2), square) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("weighted_norm_max matches exhaustive vertex oracle") {
  auto gen = testutil::rng(37);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix M = random_matrix(gen, 3, 4);
    const Matrix G = testutil::random_spd(gen, 3, 0.2);
    const Vector lo = -random_vector(gen, 4).cwiseAbs();
    const Vector hi = random_vector(gen, 4).cwiseAbs();
    const Polytope S = Polytope::box(lo, hi);

    double oracle = 0.0;
    for (int mask = 0; mask < 16; ++mask) {
      Vector v(4);
      for (int i = 0; i < 4; ++i) v[i] = (mask >> i) & 1 ? hi[i] : lo[i];
      const Vector w = M * v;
      oracle = std::max(oracle, std::sqrt(w.dot(G * w)));
    }
    CHECK(weighted_norm_max(M, G, S) == doctest::Approx(oracle).epsilon(1e-10));
  }
}

TEST_CASE("weighted_norm_max over product sets") {
  auto gen = testutil::rng(41);
  const Polytope S1 = Polytope::box(Vector::Constant(2, -0.5), Vector::Constant(2, 1.0));
  const Polytope S2 = Polytope::interval(-2.0, 0.3);
  const Matrix M = random_matrix(gen, 2, 3);
  const Matrix G = testutil::random_spd(gen, 2, 0.3);

  double oracle = 0.0;
  for (const auto& v1 : enumerate_vertices(S1))
    for (const auto& v2 : enumerate_vertices(S2)) {
      Vector s(3);
      s << v1, v2;
      const Vector w = M * s;
      oracle = std::max(oracle, std::sqrt(w.dot(G * w)));
    }
  CHECK(weighted_norm_max(M, G, {&S1, &S2}) == doctest::Approx(oracle).epsilon(1e-10));
}

TEST_CASE("weighted_norm_max monotone in box enlargement") {
  auto gen = testutil::rng(43);
  for (int trial = 0; trial < 15; ++trial) {
    const Matrix M = random_matrix(gen, 2, 3);
    const Vector r = random_vector(gen, 3).cwiseAbs() + Vector::Constant(3, 0.1);
    const Vector grow = random_vector(gen, 3).cwiseAbs();
    const double inner = weighted_norm_max(M, Matrix::Identity(2, 2), Polytope::box(-r, r));
    const double outer = weighted_norm_max(M, Matrix::Identity(2, 2), Polytope::box(-r - grow, r + grow));
    CHECK(outer >= inner - 1e-12);
  }
}

TEST_CASE("as_box recovers scaled rows") {
  Polytope S;
  S.H.resize(4, 2);
  S.H << 2, 0, 0, -1, -1, 0, 0, 0.5;
  S.b.resize(4);
  S.b << 4, 1, 3, 1;  // x <= 2, y >= -1, x >= -3, y <= 2
  const auto bx = S.as_box();
  REQUIRE(bx.has_value());
  CHECK(bx->first[0] == doctest::Approx(-3.0));
  CHECK(bx->first[1] == doctest::Approx(-1.0));
  CHECK(bx->second[0] == doctest::Approx(2.0));
  CHECK(bx->second[1] == doctest::Approx(2.0));
}
