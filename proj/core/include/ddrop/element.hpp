#pragma once

#include <vector>

#include "ddrop/algebra.hpp"
#include "ddrop/matrix_util.hpp"
#include "ddrop/pl_map.hpp"

namespace ddrop {

// A member of the dimension drop algebra, stored as an entrywise
// piecewise-linear path of pq x pq matrices.  The endpoint values must lie
// in M_p (x) 1_q and 1_p (x) M_q up to the boundary tolerance.
struct Element {
  DimensionDropAlgebra algebra;
  std::vector<double> knots;   // strictly increasing, first 0, last 1
  std::vector<Mat> values;     // one matrix per knot
};

Element make_element(const DimensionDropAlgebra& alg, std::vector<double> knots,
                     std::vector<Mat> values);

Mat eval(const Element& f, double s);

// c(f(0)) in M_p and c(f(1)) in M_q.
Mat boundary_left(const Element& f);
Mat boundary_right(const Element& f);

Element adjoint(const Element& f);

// Exact: the operator norm is convex along each segment, so the sup over
// [0,1] is attained at a knot.
double sup_norm(const Element& f);
double distance(const Element& f, const Element& g);

// Operator-norm Lipschitz constant (max slope over segments).
double lipschitz_bound(const Element& f);
// Largest delta <= 1 with |s-s'| <= delta  =>  ||f(s)-f(s')|| <= eps.
double modulus_of_continuity(const Element& f, double eps);

// s -> Re tr_n f(s) as an unclamped knot graph.
std::vector<Knot> trace_graph(const Element& f);

// Small deterministic generator family: a scalar ramp, a corner-to-corner
// interpolation, a vanishing bump, and a shift interpolation.
std::vector<Element> standard_generators(const DimensionDropAlgebra& alg);

// Deterministic pseudo-random element with the given number of interior
// knots, normalized to sup norm 1.
Element random_element(const DimensionDropAlgebra& alg, unsigned long long seed,
                       int interior_knots);

}  // namespace ddrop
