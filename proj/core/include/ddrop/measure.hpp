#pragma once

#include <utility>
#include <vector>

#include "ddrop/algebra.hpp"
#include "ddrop/pattern.hpp"
#include "ddrop/pl_map.hpp"

namespace ddrop {

struct Atom {
  double x;
  double mass;
};

// Probability measure on [0,1]: finitely many atoms plus a continuous part
// given by its PL CDF F with F(0) = 0 and F(1) = continuous mass.  Stands in
// for a tracial state; total mass must be 1.
class Measure {
 public:
  Measure(std::vector<Atom> atoms, PLMap cdf);

  static Measure lebesgue();
  static Measure point(double x);

  const std::vector<Atom>& atoms() const { return atoms_; }
  const PLMap& cdf() const { return cdf_; }

  double atom_mass() const;
  double continuous_mass() const { return cdf_.knots().back().y; }

  bool atomless() const { return atoms_.empty(); }
  // Computed at construction: the continuous CDF rises strictly between every
  // pair of consecutive knots.  Finitely many atoms cannot rescue a flat
  // stretch, so they play no part.
  bool faithful() const { return faithful_; }

  // F(x) plus the mass of atoms at locations <= x (right-continuous).
  double total_cdf(double x) const;

 private:
  std::vector<Atom> atoms_;  // sorted by location, strictly increasing
  PLMap cdf_;
  bool faithful_;
};

// Convex combination sum w_i * mu_i; weights must sum to 1.
Measure mix(const std::vector<std::pair<double, Measure>>& parts);

// Integral of g against mu, exact: trapezoid of g against the PL density of
// the continuous part plus atom sums.  Backbone of the trace integral.
double integrate(const Measure& mu, const PLMap& g);
// Same for an unclamped PL graph (trace curves can leave [0,1]).
double integrate(const Measure& mu, const std::vector<Knot>& graph);

// Image measure under a nondecreasing PL map.  Plateaus of beta convert the
// continuous mass they absorb into atoms; elsewhere the CDF transports in
// closed PL form.
Measure pushforward(const Measure& mu, const PLMap& beta);

// Image measure under an arbitrary PL map, segment by segment; each linear
// piece is monotone so the same transport applies.  Used for trace pullback,
// where the maps are only piecewise monotone.
Measure pushforward_pieces(const Measure& mu, const PLMap& t);

// Nondecreasing continuous surjection beta of [0,1] onto [0,1] with
// pushforward(lambda_src, beta) = tau: the left-continuous quantile function
// of tau composed with the CDF of lambda_src.  Atoms of tau become plateaus.
PLMap quantile_coupling(const Measure& lambda_src, const Measure& tau);

// Maximal nontrivial intervals on which beta is constant (the fibers over
// which pulled-back functions must be constant).
std::vector<std::pair<double, double>> plateaus(const PLMap& beta);

// Pullback of a tracial state along an embedding with the given pattern and
// corner remainders:
//   [a*p*delta_0 + b*q*delta_1 + p*q*sum_i mult_i*(t_i)_* tau] / (p'q').
// Mass is exactly 1 by the counting identity p*a + p*q*k + q*b = p'q'.
Measure pullback_measure(const EigenvaluePattern& pat, i64 a, i64 b,
                         const DimensionDropAlgebra& src,
                         const DimensionDropAlgebra& tgt, const Measure& tau);

}  // namespace ddrop
