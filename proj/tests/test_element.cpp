#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <functional>
#include <random>

#include "ddrop/element.hpp"
#include "ddrop/error.hpp"

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

double grid_distance(const Element& f, const Element& g, int n) {
  double best = 0.0;
  for (int i = 0; i <= n; ++i) {
    double s = static_cast<double>(i) / n;
    best = std::max(best, opnorm(eval(f, s) - eval(g, s)));
  }
  return best;
}

}  // namespace

TEST_CASE("construction, evaluation and boundary compression") {
  auto alg = validate_pair(2, 3);
  auto gens = standard_generators(alg);
  REQUIRE(gens.size() == 4);

  const Element& ramp = gens[0];
  CHECK((eval(ramp, 0.25) - 0.25 * Mat::Identity(6, 6)).norm() < 1e-15);
  CHECK((eval(ramp, 1.0) - Mat::Identity(6, 6)).norm() == 0.0);

  const Element& corner = gens[1];
  Mat x = boundary_left(corner);
  REQUIRE(x.rows() == 2);
  CHECK(std::abs(x(0, 0) - 0.5) < 1e-14);
  CHECK(std::abs(x(1, 1) - 1.0) < 1e-14);
  Mat z = boundary_right(corner);
  REQUIRE(z.rows() == 3);
  CHECK(std::abs(z(2, 2) - 1.0) < 1e-14);

  for (const Element& g : gens) {
    CHECK(left_residual(g.values.front(), 2, 3) < 1e-12);
    CHECK(right_residual(g.values.back(), 2, 3) < 1e-12);
    CHECK(sup_norm(g) <= 1.0 + 1e-12);
  }

  // A generic matrix at an endpoint is not in the boundary subalgebra.
  Mat bad = Mat::Zero(6, 6);
  bad(0, 5) = 1.0;
  CHECK(thrown_code([&] {
          make_element(alg, {0.0, 1.0}, {bad, Mat::Identity(6, 6)});
        }) == "BoundaryViolation");
  CHECK(thrown_code([&] {
          make_element(alg, {0.0, 0.5}, {Mat::Zero(6, 6), Mat::Zero(6, 6)});
        }) == "ParseError");
  CHECK(thrown_code([&] {
          make_element(alg, {0.0, 1.0}, {Mat::Zero(4, 4), Mat::Zero(4, 4)});
        }) == "DimensionMismatch");
}

TEST_CASE("sup norm and distance are exact on knots") {
  auto alg = validate_pair(2, 3);
  auto gens = standard_generators(alg);
  CHECK(sup_norm(gens[0]) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(sup_norm(gens[2]) == doctest::Approx(1.0).epsilon(1e-12));

  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) {
      double d = distance(gens[a], gens[b]);
      double g = grid_distance(gens[a], gens[b], 400);
      CHECK(d >= g - 1e-12);  // knot max dominates any grid sample
      if (a == b) CHECK(d == 0.0);
    }

  // Random elements: the fine grid gets within Lipschitz * mesh of the sup.
  for (unsigned long long seed = 1; seed <= 6; ++seed) {
    Element f = random_element(alg, seed, 3);
    Element g = random_element(alg, seed + 100, 5);
    double d = distance(f, g);
    double lip = lipschitz_bound(f) + lipschitz_bound(g);
    double gd = grid_distance(f, g, 800);
    CHECK(d >= gd - 1e-12);
    CHECK(d <= gd + lip / 800.0 + 1e-12);
  }
}

TEST_CASE("lipschitz bound and modulus of continuity") {
  auto alg = validate_pair(2, 3);
  auto gens = standard_generators(alg);
  CHECK(lipschitz_bound(gens[0]) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(lipschitz_bound(gens[2]) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(modulus_of_continuity(gens[2], 0.5) == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(modulus_of_continuity(gens[0], 2.0) == 1.0);

  // Property: |s-s'| <= modulus(eps) forces ||f(s)-f(s')|| <= eps.
  std::mt19937_64 rng(88001);
  for (int trial = 0; trial < 5; ++trial) {
    Element f = random_element(alg, 500 + trial, 4);
    for (double eps : {0.3, 0.1}) {
      double delta = modulus_of_continuity(f, eps);
      for (int i = 0; i < 200; ++i) {
        double s = static_cast<double>(rng() % 10000) / 10000.0;
        double t = std::min(1.0, s + delta * (rng() % 1000) / 1000.0);
        CHECK(opnorm(eval(f, s) - eval(f, t)) <= eps + 1e-9);
      }
    }
  }

  Element flat = make_element(alg, {0.0, 1.0},
                              {Mat::Zero(6, 6), Mat::Zero(6, 6)});
  CHECK(modulus_of_continuity(flat, 0.01) == 1.0);
}

TEST_CASE("adjoint and trace graph") {
  auto alg = validate_pair(3, 4);
  Element f = random_element(alg, 42, 3);
  Element ff = adjoint(adjoint(f));
  CHECK(distance(f, ff) == 0.0);
  CHECK(sup_norm(adjoint(f)) == doctest::Approx(sup_norm(f)).epsilon(1e-12));

  auto gens = standard_generators(alg);
  auto graph = trace_graph(gens[0]);
  REQUIRE(graph.size() == 2);
  CHECK(graph[0].y == doctest::Approx(0.0));
  CHECK(graph[1].y == doctest::Approx(1.0));

  // tr(X (x) 1)/pq = tr(X)/p at s=0 for the corner generator.
  auto cg = trace_graph(gens[1]);
  CHECK(cg.front().y == doctest::Approx((3.0 + 1.0) / (2.0 * 3.0)).epsilon(1e-12));
  CHECK(cg.back().y == doctest::Approx((4.0 + 1.0) / (2.0 * 4.0)).epsilon(1e-12));

  // The graph is the exact trace of the interpolated element mid-segment.
  Element g = random_element(alg, 77, 2);
  auto tg = trace_graph(g);
  for (double s : {0.1, 0.45, 0.83}) {
    double interp = 0.0;
    for (size_t j = 0; j + 1 < tg.size(); ++j)
      if (s >= tg[j].x && s <= tg[j + 1].x)
        interp = tg[j].y + (tg[j + 1].y - tg[j].y) * (s - tg[j].x) /
                               (tg[j + 1].x - tg[j].x);
    CHECK(std::abs(std::real(normalized_trace(eval(g, s))) - interp) < 1e-12);
  }
}

TEST_CASE("random elements are deterministic and normalized") {
  auto alg = validate_pair(2, 5);
  Element a = random_element(alg, 999, 4);
  Element b = random_element(alg, 999, 4);
  CHECK(distance(a, b) == 0.0);
  CHECK(sup_norm(a) == doctest::Approx(1.0).epsilon(1e-12));
  Element c = random_element(alg, 1000, 4);
  CHECK(distance(a, c) > 1e-3);
  Element line = random_element(alg, 5, 0);
  REQUIRE(line.knots.size() == 2);
}
