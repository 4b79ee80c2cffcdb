#pragma once

#include <vector>

#include "ddrop/error.hpp"

namespace ddrop {

struct Knot {
  double x;
  double y;
};

// Continuous piecewise-linear map [0,1] -> [0,1].  Knots have strictly
// increasing x with x_0 = 0 and x_last = 1; the value anywhere is linear
// interpolation.  Extrema sit at knots, so images and sup-distances are exact.
class PLMap {
 public:
  explicit PLMap(std::vector<Knot> knots);

  static PLMap identity() { return PLMap({{0.0, 0.0}, {1.0, 1.0}}); }
  static PLMap constant(double y) { return PLMap({{0.0, y}, {1.0, y}}); }
  static PLMap line(double y0, double y1) { return PLMap({{0.0, y0}, {1.0, y1}}); }

  const std::vector<Knot>& knots() const { return knots_; }

  double operator()(double s) const;

  double min_value() const;
  double max_value() const;
  double diameter() const { return max_value() - min_value(); }
  double max_slope() const;

  bool is_nondecreasing(double tol = 0.0) const;
  bool is_constant(double tol = 0.0) const;

 private:
  std::vector<Knot> knots_;
};

// outer(inner(x)), exact: knots of the result are inner's knots plus the
// preimages under inner of outer's knots.
PLMap compose_pl(const PLMap& outer, const PLMap& inner);

// Union of both knot abscissae, deduplicated.
std::vector<double> merged_breakpoints(const PLMap& f, const PLMap& g);
std::vector<double> merged_breakpoints(const std::vector<PLMap>& maps);

// max_s |f(s) - g(s)|, exact via the common refinement.
double sup_distance(const PLMap& f, const PLMap& g);

// Interior points where f - g changes sign (endpoints of the refinement
// excluded); used to refine families before pointwise sorting.
std::vector<double> crossing_points(const PLMap& f, const PLMap& g);

// Re-knot f onto a breakpoint superset (values unchanged).
PLMap reknot(const PLMap& f, const std::vector<double>& xs);

// Raw PL graphs: knots with increasing x covering [0,1] but y unconstrained
// (trace curves can leave [0,1]).  Evaluation clamps x into the knot range.
double eval_graph(const std::vector<Knot>& graph, double x);

// graph(inner(x)) as a graph: inner's knots plus preimages of the graph's
// breakpoints, exact on each linear piece.
std::vector<Knot> compose_unclamped(const std::vector<Knot>& graph,
                                    const PLMap& inner);

}  // namespace ddrop
