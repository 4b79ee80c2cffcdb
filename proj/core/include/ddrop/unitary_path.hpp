#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "ddrop/matrix_util.hpp"
#include "ddrop/pl_map.hpp"

namespace ddrop {

// Continuous unitary-valued path on [0,1], built from a small combinator
// algebra so that corrective constructions evaluate exactly instead of being
// resampled.  Paths above the dense-evaluation cap exist only as implicit
// permutation certificates: their structure is checked through integer
// censuses and at() refuses to materialize them.
class UnitaryPath {
 public:
  UnitaryPath() = default;

  static UnitaryPath identity(i128 dim);
  static UnitaryPath constant(Mat u);
  // Endpoints exactly the two permutations, joined by exp(t log(P0^-1 P1)).
  static UnitaryPath perm_pair(std::vector<i64> p0, std::vector<i64> p1);
  // Pinned unitaries at increasing parameters (first 0, last 1), joined by
  // principal geodesics.  Spectral data is computed once at construction.
  static UnitaryPath knots(std::vector<double> s, std::vector<Mat> u);
  static UnitaryPath product(UnitaryPath a, UnitaryPath b);  // s -> a(s) b(s)
  static UnitaryPath adjoint_of(UnitaryPath a);
  static UnitaryPath reparam(UnitaryPath a, PLMap time);
  // Pieces own [breaks_j, breaks_j+1] in local time; breaks start 0, end 1.
  static UnitaryPath piecewise(std::vector<double> breaks,
                               std::vector<UnitaryPath> pieces);
  // s -> blockdiag(inner(t_j(s))) * P(post)^-1 with t_j the time maps.
  static UnitaryPath block_lift(UnitaryPath inner, std::vector<PLMap> times,
                                std::vector<i64> post_perm);
  static UnitaryPath implicit_permutation(i128 dim);

  i128 dim() const;
  bool concrete() const;
  Mat at(double s) const;
  // Certified upper bound for the operator-norm Lipschitz constant.
  double lipschitz_bound() const;
  // If the value at s=0 (end=0) or s=1 (end=1) is structurally a permutation
  // matrix, its one-line form; lets boundary checks skip dense conjugation.
  std::optional<std::vector<i64>> endpoint_perm(int end) const;

  struct Node;
  std::shared_ptr<const Node> node() const { return node_; }

 private:
  explicit UnitaryPath(std::shared_ptr<const Node> n) : node_(std::move(n)) {}
  std::shared_ptr<const Node> node_;
};

double max_unitarity_defect(const UnitaryPath& u, int grid_n);

}  // namespace ddrop
