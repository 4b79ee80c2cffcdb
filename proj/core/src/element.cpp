#include "ddrop/element.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "ddrop/config.hpp"
#include "ddrop/error.hpp"

namespace ddrop {

namespace {

void check_shape(const Element& f) {
  i64 n = f.algebra.p * f.algebra.q;
  require(f.knots.size() == f.values.size() && f.knots.size() >= 2,
          "ParseError", "element: knot/value count mismatch");
  require(f.knots.front() == 0.0 && f.knots.back() == 1.0, "ParseError",
          "element: knots must start at 0 and end at 1");
  for (size_t j = 1; j < f.knots.size(); ++j)
    require(f.knots[j] > f.knots[j - 1], "ParseError",
            "element: knots must be strictly increasing");
  for (const Mat& v : f.values)
    require(v.rows() == n && v.cols() == n, "DimensionMismatch",
            "element: value size differs from p*q");
}

}  // namespace

Element make_element(const DimensionDropAlgebra& alg, std::vector<double> knots,
                     std::vector<Mat> values) {
  Element f{alg, std::move(knots), std::move(values)};
  check_shape(f);
  double res0 = left_residual(f.values.front(), alg.p, alg.q);
  double res1 = right_residual(f.values.back(), alg.p, alg.q);
  require(res0 <= kTolBoundary, "BoundaryViolation",
          "element: value at 0 is " + std::to_string(res0) +
              " away from M_p (x) 1");
  require(res1 <= kTolBoundary, "BoundaryViolation",
          "element: value at 1 is " + std::to_string(res1) +
              " away from 1 (x) M_q");
  return f;
}

Mat eval(const Element& f, double s) {
  require(s >= 0.0 && s <= 1.0, "ParseError", "eval: parameter outside [0,1]");
  auto it = std::upper_bound(f.knots.begin(), f.knots.end(), s);
  if (it == f.knots.end()) return f.values.back();
  size_t hi = static_cast<size_t>(it - f.knots.begin());
  if (hi == 0) return f.values.front();
  size_t lo = hi - 1;
  if (s == f.knots[lo]) return f.values[lo];
  double w = (s - f.knots[lo]) / (f.knots[hi] - f.knots[lo]);
  return (1.0 - w) * f.values[lo] + w * f.values[hi];
}

Mat boundary_left(const Element& f) {
  return compress_left(f.values.front(), f.algebra.p, f.algebra.q, kTolBoundary);
}

Mat boundary_right(const Element& f) {
  return compress_right(f.values.back(), f.algebra.p, f.algebra.q, kTolBoundary);
}

Element adjoint(const Element& f) {
  Element out = f;
  for (Mat& v : out.values) v = v.adjoint().eval();
  return out;
}

double sup_norm(const Element& f) {
  double best = 0.0;
  for (const Mat& v : f.values) best = std::max(best, opnorm(v));
  return best;
}

double distance(const Element& f, const Element& g) {
  require(f.algebra.p == g.algebra.p && f.algebra.q == g.algebra.q,
          "DimensionMismatch", "distance: algebras differ");
  std::vector<double> grid;
  grid.reserve(f.knots.size() + g.knots.size());
  std::merge(f.knots.begin(), f.knots.end(), g.knots.begin(), g.knots.end(),
             std::back_inserter(grid));
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  double best = 0.0;
  for (double s : grid) best = std::max(best, opnorm(eval(f, s) - eval(g, s)));
  return best;
}

double lipschitz_bound(const Element& f) {
  double best = 0.0;
  for (size_t j = 0; j + 1 < f.knots.size(); ++j) {
    double ds = f.knots[j + 1] - f.knots[j];
    best = std::max(best, opnorm(f.values[j + 1] - f.values[j]) / ds);
  }
  return best;
}

double modulus_of_continuity(const Element& f, double eps) {
  require(eps > 0.0, "NonPositive", "modulus_of_continuity: eps must be positive");
  double lip = lipschitz_bound(f);
  if (lip <= 0.0) return 1.0;
  return std::min(1.0, eps / lip);
}

std::vector<Knot> trace_graph(const Element& f) {
  std::vector<Knot> graph;
  graph.reserve(f.knots.size());
  for (size_t j = 0; j < f.knots.size(); ++j)
    graph.push_back({f.knots[j], std::real(normalized_trace(f.values[j]))});
  return graph;
}

std::vector<Element> standard_generators(const DimensionDropAlgebra& alg) {
  i64 p = alg.p, q = alg.q, n = p * q;
  Mat id = Mat::Identity(n, n);
  Mat zero = Mat::Zero(n, n);

  std::vector<Element> gens;
  gens.push_back(make_element(alg, {0.0, 1.0}, {zero, id}));

  Mat x = Mat::Zero(p, p), z = Mat::Zero(q, q);
  for (i64 i = 0; i < p; ++i) x(i, i) = static_cast<double>(i + 1) / p;
  for (i64 a = 0; a < q; ++a) z(a, a) = static_cast<double>(a + 1) / q;
  gens.push_back(make_element(
      alg, {0.0, 1.0},
      {kron(x, Mat::Identity(q, q)), kron(Mat::Identity(p, p), z)}));

  Mat bump = zero;
  if (n >= 2) {
    bump(0, 1) = 1.0;
    bump(1, 0) = 1.0;
  } else {
    bump(0, 0) = 1.0;
  }
  gens.push_back(make_element(alg, {0.0, 0.5, 1.0}, {zero, bump, zero}));

  std::vector<i64> cp(static_cast<size_t>(p)), cq(static_cast<size_t>(q));
  for (i64 i = 0; i < p; ++i) cp[i] = (i + 1) % p;
  for (i64 a = 0; a < q; ++a) cq[a] = (a + 1) % q;
  gens.push_back(make_element(
      alg, {0.0, 1.0},
      {kron(perm_matrix(cp), Mat::Identity(q, q)),
       kron(Mat::Identity(p, p), perm_matrix(cq))}));
  return gens;
}

Element random_element(const DimensionDropAlgebra& alg, unsigned long long seed,
                       int interior_knots) {
  require(interior_knots >= 0, "NonPositive",
          "random_element: interior knot count must be >= 0");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  i64 p = alg.p, q = alg.q, n = p * q;
  auto rand_mat = [&](i64 m) {
    Mat a(m, m);
    for (i64 i = 0; i < m; ++i)
      for (i64 j = 0; j < m; ++j) a(i, j) = Cplx(g(rng), g(rng));
    return a;
  };

  std::vector<double> knots;
  std::vector<Mat> values;
  knots.push_back(0.0);
  values.push_back(kron(rand_mat(p), Mat::Identity(q, q)));
  for (int j = 0; j < interior_knots; ++j) {
    knots.push_back(static_cast<double>(j + 1) / (interior_knots + 1));
    values.push_back(rand_mat(n));
  }
  knots.push_back(1.0);
  values.push_back(kron(Mat::Identity(p, p), rand_mat(q)));

  double top = 0.0;
  for (const Mat& v : values) top = std::max(top, opnorm(v));
  if (top > 0.0)
    for (Mat& v : values) v /= top;
  return make_element(alg, std::move(knots), std::move(values));
}

}  // namespace ddrop
