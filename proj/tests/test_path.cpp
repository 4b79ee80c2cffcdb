#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <functional>
#include <random>

#include "ddrop/error.hpp"
#include "ddrop/unitary_path.hpp"

using namespace ddrop;

namespace {

std::string thrown_code(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return "";
}

Mat rand_unitary(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> g;
  Mat a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = Cplx(g(rng), g(rng));
  Eigen::HouseholderQR<Mat> qr(a);
  return qr.householderQ();
}

std::vector<i64> rand_perm(std::mt19937_64& rng, int n) {
  std::vector<i64> p(n);
  for (int i = 0; i < n; ++i) p[i] = i;
  for (int i = n - 1; i > 0; --i)
    std::swap(p[i], p[rng() % static_cast<unsigned>(i + 1)]);
  return p;
}

}  // namespace

TEST_CASE("perm pair endpoints and lipschitz certificate") {
  std::mt19937_64 rng(91001);
  for (int trial = 0; trial < 10; ++trial) {
    int n = 3 + static_cast<int>(rng() % 6);
    auto p0 = rand_perm(rng, n), p1 = rand_perm(rng, n);
    auto path = UnitaryPath::perm_pair(p0, p1);
    CHECK((path.at(0.0) - perm_matrix(p0)).norm() < 1e-12);
    CHECK((path.at(1.0) - perm_matrix(p1)).norm() < 1e-10);
    CHECK(unitarity_defect(path.at(0.37)) < 1e-10);
    double lip = path.lipschitz_bound();
    for (int i = 0; i < 40; ++i) {
      double s = i / 40.0, t = (i + 1) / 40.0;
      CHECK(opnorm(path.at(t) - path.at(s)) <= lip * (t - s) + 1e-9);
    }
  }
}

TEST_CASE("knot paths pin their values") {
  std::mt19937_64 rng(91002);
  int n = 5;
  Mat u0 = Mat::Identity(n, n);
  Mat u1 = rand_unitary(rng, n);
  Mat u2 = rand_unitary(rng, n);
  auto path = UnitaryPath::knots({0.0, 0.4, 1.0}, {u0, u1, u2});
  CHECK((path.at(0.0) - u0).norm() < 1e-12);
  CHECK((path.at(0.4) - u1).norm() < 1e-12);
  CHECK((path.at(1.0) - u2).norm() < 1e-9);
  CHECK(max_unitarity_defect(path, 41) < 1e-9);
  double lip = path.lipschitz_bound();
  for (int i = 0; i < 60; ++i) {
    double s = i / 60.0, t = (i + 1) / 60.0;
    CHECK(opnorm(path.at(t) - path.at(s)) <= lip * (t - s) + 1e-9);
  }
  CHECK(thrown_code([&] { UnitaryPath::knots({0.0, 0.5}, {u0, u1, u2}); }) ==
        "ParseError");
}

TEST_CASE("combinators evaluate literally") {
  std::mt19937_64 rng(91003);
  int n = 4;
  auto a = UnitaryPath::knots({0.0, 1.0},
                              {Mat::Identity(n, n), rand_unitary(rng, n)});
  auto b = UnitaryPath::perm_pair(rand_perm(rng, n), rand_perm(rng, n));
  auto prod = UnitaryPath::product(a, b);
  auto adj = UnitaryPath::adjoint_of(a);
  auto rep = UnitaryPath::reparam(a, PLMap::line(0.2, 0.7));
  for (double s : {0.0, 0.3, 0.77, 1.0}) {
    CHECK((prod.at(s) - a.at(s) * b.at(s)).norm() < 1e-12);
    CHECK((adj.at(s) - a.at(s).adjoint()).norm() == 0.0);
    CHECK((rep.at(s) - a.at(0.2 + 0.5 * s)).norm() < 1e-12);
  }

  auto pieces = UnitaryPath::piecewise(
      {0.0, 0.25, 1.0}, {a, UnitaryPath::constant(a.at(1.0))});
  CHECK((pieces.at(0.125) - a.at(0.5)).norm() < 1e-12);
  CHECK((pieces.at(0.25) - a.at(1.0)).norm() < 1e-12);
  CHECK((pieces.at(0.7) - a.at(1.0)).norm() == 0.0);
  // Continuity across the junction.
  CHECK((pieces.at(0.2499) - pieces.at(0.2501)).norm() < 1e-2);

  auto id = UnitaryPath::identity(3);
  CHECK((id.at(0.5) - Mat::Identity(3, 3)).norm() == 0.0);
}

TEST_CASE("block lift stacks the inner path with relocation") {
  std::mt19937_64 rng(91004);
  int d = 3;
  auto inner = UnitaryPath::knots({0.0, 1.0},
                                  {Mat::Identity(d, d), rand_unitary(rng, d)});
  std::vector<PLMap> times = {PLMap::constant(0.0), PLMap::identity(),
                              PLMap::line(1.0, 0.0)};
  auto lift = UnitaryPath::block_lift(inner, times, {});
  REQUIRE(lift.dim() == 9);
  for (double s : {0.0, 0.4, 1.0}) {
    Mat m = lift.at(s);
    CHECK((m.block(0, 0, d, d) - inner.at(0.0)).norm() < 1e-12);
    CHECK((m.block(d, d, d, d) - inner.at(s)).norm() < 1e-12);
    CHECK((m.block(2 * d, 2 * d, d, d) - inner.at(1.0 - s)).norm() < 1e-12);
    CHECK(unitarity_defect(m) < 1e-9);
  }
  auto reloc = rand_perm(rng, 9);
  auto lifted = UnitaryPath::block_lift(inner, times, reloc);
  Mat plain = lift.at(0.3), moved = lifted.at(0.3);
  for (int k = 0; k < 9; ++k)
    CHECK((moved.col(reloc[k]) - plain.col(k)).norm() == 0.0);
}

TEST_CASE("implicit paths refuse to materialize") {
  i128 big = static_cast<i128>(1) << 100;
  auto path = UnitaryPath::implicit_permutation(big);
  CHECK_FALSE(path.concrete());
  CHECK(path.dim() == big);
  CHECK(thrown_code([&] { path.at(0.5); }) == "Overflow");
  auto small = UnitaryPath::identity(static_cast<i128>(100000));
  CHECK(thrown_code([&] { small.at(0.0); }) == "Overflow");
}
