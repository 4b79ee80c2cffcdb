#pragma once

#include <vector>

#include "ddrop/algebra.hpp"
#include "ddrop/pl_map.hpp"

namespace ddrop {

// Ordered family of PL self-maps of [0,1] with multiplicities.  The paper's k
// is size() = sum of mults; multiplicities keep deep-system patterns compact
// (a run of equal maps is stored once).  `normalized` records sortedness:
// t_1(x) <= ... <= t_k(x) for all x, in block order.
struct EigenvaluePattern {
  std::vector<PLMap> maps;
  std::vector<i128> mults;  // parallel to maps, each >= 1
  bool normalized = false;

  i128 size() const {
    i128 s = 0;
    for (auto m : mults) s += m;
    return s;
  }
};

EigenvaluePattern make_pattern(std::vector<PLMap> maps, bool normalized = false);
EigenvaluePattern make_pattern(std::vector<PLMap> maps, std::vector<i128> mults,
                               bool normalized = false);

// Distinct values of the family at abscissa x with total multiplicities,
// sorted by value; values within `tol` are merged.
std::vector<std::pair<double, i128>> value_multiplicities(
    const EigenvaluePattern& pat, double x, double tol = 1e-12);

bool is_pointwise_sorted(const EigenvaluePattern& pat, double tol = 1e-12);

// Pointwise sort: the i-th output block is the i-th smallest value function.
// Value multisets at every x are preserved up to interpolation noise; blocks
// are split at crossings so each output map is PL.
EigenvaluePattern normalize(const EigenvaluePattern& pat);

// Largest image diameter over the family.
double variation(const EigenvaluePattern& pat);

struct Census {
  i128 a_count = 0;  // #{i : max t_i <= y+eps}
  i128 b_count = 0;  // #{i : min t_i <  y-eps}
  i128 c_count = 0;  // max(b_count - a_count, 0)
  double y = 0.0;
  double eps = 0.0;
};

// Straddle census at (y, eps); input must be pointwise sorted.
Census census(const EigenvaluePattern& pat, double y, double eps);

// sup_{z in [0,1]} dist(z, values): max of first value, 1-last, and half the
// widest interior gap.
double hausdorff_gap(std::vector<double> values);

struct ComposedPattern {
  EigenvaluePattern pattern;
  i64 a = 0;
  i64 b = 0;
};

// Eigenvalue pattern of a composite embedding.  `outer` belongs to the first
// hom (m -> n, remainders a_o,b_o), `inner` to the second (n -> l); composite
// maps are outer∘inner.  Inner remainders acting on outer boundary blocks
// produce constant maps; composite remainders are reduced into [0,q_m) x
// [0,p_m) with the overflow folded into constant maps at 0 and 1.
ComposedPattern compose(const DimensionDropAlgebra& m, const DimensionDropAlgebra& n,
                        const DimensionDropAlgebra& l,
                        const EigenvaluePattern& outer, i64 a_o, i64 b_o,
                        const EigenvaluePattern& inner, i64 a_i, i64 b_i);

// Builds the k PL maps realizing the embedding integers: boundary counts
// exactly (n00,n01,n10,n11), union of images [0,1], all diameters < eps, and
// endpoint value multiplicities divisible by q' (at 0) and p' (at 1).
// Requires the side conditions (flagged in `ints`); with eps >= 1 a coarse
// construction with diameters <= 1 is substituted when they fail.
EigenvaluePattern synthesize(const EmbeddingIntegers& ints,
                             const DimensionDropAlgebra& src,
                             const DimensionDropAlgebra& tgt, double eps);

}  // namespace ddrop
