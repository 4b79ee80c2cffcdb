#pragma once

#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ddrop/element.hpp"
#include "ddrop/hom.hpp"
#include "ddrop/measure.hpp"

namespace ddrop {

inline constexpr double kInfValue = std::numeric_limits<double>::infinity();

struct StrictnessWitness;

// Two-variable map on finite sample tuples satisfying the four bi-Katetov
// inequalities against the stored distance matrices:
//   v[i][j] <= dl[i][i'] + v[i'][j],   dl[i][i'] <= v[i][j] + v[i'][j],
//   v[i][j] <= dr[j][j'] + v[i][j'],   dr[j][j'] <= v[i][j] + v[i][j'].
// Values beyond the samples are read through the trivial-extension formula.
// `correction` is the grid slack already folded into embedding-built values
// (so every entry is a certified upper bound of the underlying distance);
// exact constructions record 0.
struct SampledBiKatetov {
  std::vector<Element> left;
  std::vector<Element> right;
  std::vector<std::vector<double>> values;      // |left| x |right|, inf allowed
  std::vector<std::vector<double>> dist_left;   // sup distances of left samples
  std::vector<std::vector<double>> dist_right;
  double correction = 0.0;
  std::string note;
  std::shared_ptr<const StrictnessWitness> witness;
};

// Attached by builders of the form "trivial extension plus uniform margin":
// re-extending psi over the strict map's samples and adding eps reproduces it.
struct StrictnessWitness {
  SampledBiKatetov psi;
  std::vector<int> left_support;   // indices into the strict map's samples
  std::vector<int> right_support;
  double eps = 0.0;
};

// Largest violation of the four inequalities over all sample pairs (0 when
// the map is valid; handles infinite entries).
double katetov_defect(const SampledBiKatetov& phi);

// Validating constructor for explicit value matrices; distances are computed
// exactly from the samples.  Rejects shape mismatches, negative entries, and
// inequality violations beyond tol.
SampledBiKatetov make_bikatetov(std::vector<Element> left,
                                std::vector<Element> right,
                                std::vector<std::vector<double>> values,
                                double tol = kTolExact);

// A pair of unital embeddings into a common target, the raw material of
// d(iota(a), eta(b)) maps.  The target trace is carried for the
// trace-preserving calculus; make_joint_embedding only checks shapes.
struct JointEmbedding {
  Homomorphism iota;
  Homomorphism eta;
  Measure target_trace;
};

JointEmbedding make_joint_embedding(Homomorphism iota, Homomorphism eta,
                                    Measure target_trace);

// Exact piecewise-linear image h(f) as an element of the target; requires a
// structurally constant permutation path (evaluation then commutes with
// linear interpolation between the pulled-back breakpoints).
Element image_element(const Homomorphism& h, const Element& f);

// phi[i][j] = d(iota(a_i), eta(b_j)).  When both paths are constant
// permutations the distances are exact; otherwise they are certified grid
// upper bounds (grid sup plus the recorded Lipschitz correction).  Both
// patterns must cover [0,1] so the embeddings are isometric and the stored
// source distances stay compatible.
SampledBiKatetov phi_from_pair(const JointEmbedding& je,
                               const std::vector<Element>& left,
                               const std::vector<Element>& right, int grid_n);

// Largest bi-Katetov map on the enlarged samples that restricts below phi:
//   E(a', b') = inf over old (a, b) of [d(a', a) + phi(a, b) + d(b, b')].
// Old pairs keep their values; new samples within kTolExact of existing ones
// are identified with them, so extending by existing samples is idempotent.
SampledBiKatetov extend_trivial(const SampledBiKatetov& phi,
                                const std::vector<Element>& new_left,
                                const std::vector<Element>& new_right);

// extend_trivial plus a uniform margin on every entry.  Margins at or above
// kStrictnessMinGap attach a strictness witness (the original phi with
// eps = margin); smaller margins only leave a note.
SampledBiKatetov extend_with_margin(const SampledBiKatetov& phi,
                                    const std::vector<Element>& new_left,
                                    const std::vector<Element>& new_right,
                                    double margin);

// (psi phi)[i][k] = min over the shared middle samples of phi[i][j] + psi[j][k],
// an upper bound of the inf over the full middle algebra.
SampledBiKatetov compose_apx(const SampledBiKatetov& phi,
                             const SampledBiKatetov& psi);

// max over a in A0 (indices into left) of min over right samples of phi(a, b);
// phi is eps-total on A0 in the sampled sense iff this is <= eps.
double totality_defect(const SampledBiKatetov& phi, const std::vector<int>& a0);

std::optional<StrictnessWitness> strictness_witness(const SampledBiKatetov& phi);

// A generating tuple with its designated trace, the points of the d^K
// pseudo-metric space.
struct GeneratorTuple {
  DimensionDropAlgebra algebra;
  Measure trace;
  std::vector<Element> gens;
};

struct SearchBudget {
  int max_candidates = 6;  // common-target synthesis attempts
  i64 max_dim = 500;       // cap on the candidate target p''q''
  int grid_n = 33;
  double eps = 0.5;        // pattern variation passed to synthesis
  bool align = true;       // try conjugation recovery for same-algebra tuples
};

struct DkUpperResult {
  double bound = kInfValue;
  std::optional<JointEmbedding> certificate;
  bool exhausted = true;
  std::string note;
};

// Certified upper bound for the joint-embedding pseudo-metric
//   inf { max_i d(iota(a_i), eta(b_i)) }  over trace-preserving pairs.
// Candidates: the identity pair (same algebra, same trace), a recovered
// conjugation for tuples related by Ad of a unitary, and quantile-coupled
// embeddings into enumerated common targets.  Every returned certificate has
// been verified; when no candidate fits the budget the bound is infinity with
// no certificate (the BudgetExhausted outcome).
DkUpperResult dk_upper(const GeneratorTuple& gen_a, const GeneratorTuple& gen_b,
                       const SearchBudget& budget);

}  // namespace ddrop
