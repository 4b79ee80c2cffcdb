#pragma once

#include <optional>
#include <vector>

#include "ddrop/algebra.hpp"
#include "ddrop/config.hpp"
#include "ddrop/element.hpp"
#include "ddrop/measure.hpp"
#include "ddrop/pattern.hpp"
#include "ddrop/unitary_path.hpp"

namespace ddrop {

// *-homomorphism between dimension drop algebras in normal form: an
// eigenvalue pattern, corner multiplicities a and b, and a unitary path over
// the target.  h(f)(s) = Ad(u(s)) diag[c(f(0)) x a, f(t_i(s)) x mult_i,
// c(f(1)) x b].  Composites may carry a, b beyond the least-remainder range;
// conservation p a + pq k + q b = p'q' always holds.
struct Homomorphism {
  DimensionDropAlgebra source;
  DimensionDropAlgebra target;
  i64 a = 0;
  i64 b = 0;
  EigenvaluePattern pattern;
  UnitaryPath u;
};

Homomorphism make_homomorphism(const DimensionDropAlgebra& source,
                               const DimensionDropAlgebra& target, i64 a, i64 b,
                               EigenvaluePattern pattern, UnitaryPath u);

Homomorphism identity_hom(const DimensionDropAlgebra& alg);

// The diagonal of h(f)(s) before conjugation, one entry per distinct block.
struct BlockList {
  std::vector<Mat> blocks;
  std::vector<i128> mults;
};
BlockList hom_blocks(const Homomorphism& h, const Element& f, double s);

Mat evaluate(const Homomorphism& h, const Element& f, double s);

struct MorphismReport {
  double multiplicativity = 0.0;
  double adjoint = 0.0;
  double linearity = 0.0;
  double unitality = 0.0;
  double boundary0 = 0.0;
  double boundary1 = 0.0;
  double unitarity = 0.0;
  // Implicit unitary: algebraic defects vanish identically and membership is
  // certified through the integer censuses instead of matrices.
  bool structural_only = false;
  bool boundary_certified = false;

  double max_defect() const;
};

MorphismReport verify_morphism(const Homomorphism& h,
                               const std::vector<Element>& gens,
                               int grid_n = kDefaultGrid);

// Permutation pair realizing the boundary grouping of an admissible pattern:
// at s=0 the conjugated diagonal becomes Y (x) 1_{q'}, at s=1 it becomes
// 1_{p'} (x) W.  Implicit certificate above the build cap;
// BoundaryViolation when the endpoint censuses lack the divisibility.
UnitaryPath boundary_grouping_path(const DimensionDropAlgebra& src,
                                   const DimensionDropAlgebra& tgt, i64 a,
                                   i64 b, const EigenvaluePattern& pat);

// Unital embedding: derives the integers, synthesizes a pattern with
// variation < eps, and realizes the boundary grouping by an explicit
// permutation pair.
Homomorphism synthesize_embedding(const DimensionDropAlgebra& src,
                                  const DimensionDropAlgebra& tgt, double eps);

// Trace-preserving variant: pattern maps are reparametrized by the quantile
// coupling between the pulled-back target trace and tau_src, so
// pullback_trace(h, tau_tgt) == tau_src.  Needs pq | p'q' (zero corners),
// atomless faithful tau_tgt and faithful tau_src.
Homomorphism synthesize_embedding(const DimensionDropAlgebra& src,
                                  const DimensionDropAlgebra& tgt, double eps,
                                  const Measure& tau_src,
                                  const std::optional<Measure>& tau_tgt);

struct CorrectiveResult {
  UnitaryPath w;
  double delta = 0.0;             // five-segment time margin (0 = exact mode)
  bool exact_conjugacy = false;   // w = u2 u1* was already admissible
  std::vector<double> grid_defects;  // per grid point, max over generators
  double max_defect = 0.0;
  double median_defect = 0.0;
};

// Corrective unitary between two embeddings with the same corner data whose
// normalized patterns are closer than every generator modulus: returns w with
// max_g ||Ad(w) h1(g) - h2(g)|| certified on the grid (< 5 eps by design).
CorrectiveResult corrective_unitary(const Homomorphism& h1,
                                    const Homomorphism& h2,
                                    const std::vector<Element>& gens,
                                    double eps, int grid_n = kDefaultGrid);

// Pattern-level part of the precondition: rank-paired sup distance of the two
// patterns, to compare against min_g modulus_of_continuity(g, eps).
double pattern_distance(const EigenvaluePattern& t1,
                        const EigenvaluePattern& t2);
double corrective_defect_bound(const EigenvaluePattern& t1,
                               const EigenvaluePattern& t2,
                               const std::vector<Element>& gens, double eps);

// tau(f) for a trace given by a measure on [0,1].
double trace_value(const Measure& tau, const Element& f);
// Trace on the source induced by h and a target trace.
Measure pullback_trace(const Homomorphism& h, const Measure& tau_tgt);
// tau_tgt(h(f)), in closed form through the pullback measure.
double hom_trace(const Homomorphism& h, const Element& f,
                 const Measure& tau_tgt);

// h2 after h1, with the unitary lifted exactly; requires h2.a == h2.b == 0
// and both paths concrete.  Corner multiplicities multiply instead of being
// reduced, so the result may have a >= q; the pattern keeps (outer, inner)
// block order and is not normalized.
Homomorphism compose_homs(const Homomorphism& h2, const Homomorphism& h1);

}  // namespace ddrop
