#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "ddrop/hom.hpp"
#include "ddrop/measure.hpp"
#include "ddrop/pattern.hpp"

namespace ddrop {

struct SystemStage {
  DimensionDropAlgebra algebra;
  Measure trace;
};

// Finite inductive system of prime dimension drop algebras: stage data plus
// the connecting embeddings, with a lazy cache of composite patterns.  The
// cache is not synchronized; checkers fill it sequentially before fanning out.
struct InductiveSystem {
  std::vector<SystemStage> stage_list;
  std::vector<Homomorphism> steps;  // steps[n] connects stage n to stage n+1

  int stages() const { return static_cast<int>(stage_list.size()); }

  mutable std::map<std::pair<int, int>, ComposedPattern> cache;
};

// Validates chain compatibility and verifies every step: dense/blockwise
// morphism defects <= 1e-9 while the source still fits in matrices, integer
// boundary-census certification beyond that (deep stages cannot materialize
// a single generator).
InductiveSystem make_system(std::vector<SystemStage> stage_list,
                            std::vector<Homomorphism> steps);

// Composite pattern of the connecting embedding stage m -> stage n (m < n),
// including the accumulated corner remainders; memoized per system.
const ComposedPattern& composite_pattern(const InductiveSystem& sys, int m,
                                         int n);

// Straddle census of the pointwise-sorted family, computed without
// materializing the sort: a_count = min over x of #{values <= y+eps at x},
// b_count = max over x of #{values < y-eps at x}.  These depend only on the
// value multisets per x, so composite patterns need no normalization pass
// first, and the result agrees exactly with census() on sorted input.
Census census_any_order(const EigenvaluePattern& pat, double y, double eps);

// Largest-image-diameter table of the composites out of stage m.  A verdict
// at the horizon is a finite-horizon proxy for the decay condition, never a
// proof of the limit; the trend flag reports whether the table is monotone.
struct VariationReport {
  int m = 0;
  int horizon = 0;
  double tol = 0.0;
  std::vector<int> stage;  // n = m+1 .. horizon
  std::vector<double> v;   // V(iota_{m->n})
  bool nonincreasing = true;
  double final_value = 0.0;
  bool pass = false;
  std::string note;
};
VariationReport check_variation(const InductiveSystem& sys, int m, int horizon,
                                double tol);

// Per y: the earliest n <= horizon at which every x with some composite map
// value equal to y has a value family eps-dense in [0,1].  x-candidates are
// solved exactly on the PL segments; a segment constant at y contributes its
// endpoints and the pattern knots it spans.
struct SimplicityRow {
  double y = 0.0;
  int n = -1;         // earliest passing stage, -1 when none by the horizon
  double gap = 0.0;   // worst Hausdorff gap at that stage (at the horizon if none)
  int candidates = 0; // x-candidates inspected at the recorded stage
};
struct SimplicityReport {
  int m = 0;
  int horizon = 0;
  double eps = 0.0;
  int y_grid = 0;
  std::vector<SimplicityRow> rows;
  bool pass = false;
  std::string note;
};
SimplicityReport check_simplicity(const InductiveSystem& sys, int m, double eps,
                                  int y_grid, int horizon);

// Straddle-count ratios c(y, eps) / k over the y-grid and every stage up to
// the horizon; the verdict reads only the horizon column.
struct MonotracialReport {
  int m = 0;
  int horizon = 0;
  double eps = 0.0;
  int y_grid = 0;
  double ratio_tol = 0.0;
  std::vector<int> stage;                 // n = m+1 .. horizon
  std::vector<double> ys;
  std::vector<std::vector<double>> ratio; // [stage index][y index]
  double max_final = 0.0;
  bool pass = false;
  std::string note;
};
MonotracialReport check_monotracial(const InductiveSystem& sys, int m,
                                    double eps, int y_grid, int horizon,
                                    double ratio_tol);

// Lebesgue-traced tower grown from `start`: each target is sized past the
// embedding bound for the scheduled variation (q' the next multiple of pq,
// p' the next coprime integer), steps synthesized trace-preserving.  Throws
// BoundNotMet if a synthesized step misses its scheduled variation and
// Overflow when the next stage would leave 64-bit coordinates.
InductiveSystem standard_system(const DimensionDropAlgebra& start, int stages,
                                const std::vector<double>& eps_schedule);

// The all-identity negative control on one algebra ("nothing ever shrinks").
InductiveSystem identity_system(const DimensionDropAlgebra& alg, int stages,
                                const Measure& trace);

}  // namespace ddrop
