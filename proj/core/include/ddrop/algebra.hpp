#pragma once

#include <optional>
#include <string>
#include <utility>

#include "ddrop/error.hpp"
#include "ddrop/ints.hpp"

namespace ddrop {

// The prime dimension drop algebra Z_{p,q}: continuous M_{pq}-valued functions
// on [0,1] whose value at 0 lies in M_p ⊗ 1_q and at 1 in 1_p ⊗ M_q.
// Construction validates gcd(p,q)=1, so a value of this type is always prime.
struct DimensionDropAlgebra {
  i64 p;
  i64 q;

  DimensionDropAlgebra(i64 p_in, i64 q_in);

  i128 matrix_size() const { return static_cast<i128>(p) * q; }

  bool operator==(const DimensionDropAlgebra& o) const {
    return p == o.p && q == o.q;
  }
  bool operator!=(const DimensionDropAlgebra& o) const { return !(*this == o); }

  std::string name() const;  // "Z_{p,q}"
};

DimensionDropAlgebra validate_pair(i64 p, i64 q);

// All integers of the unital embedding Z_{p,q} -> Z_{p',q'}.
//   a, b     remainder indices, 0 <= a < q, 0 <= b < p
//   k        pattern length:  p*a + p*q*k + q*b = p'*q'
//   l0,m0    in [0,q):  p*l0 = p' (mod q),  p*m0 = q' (mod q)
//   l1,m1    in [0,p):  q*l1 = p' (mod p),  q*m1 = q' (mod p)
//   n00,n01  boundary multiplicities at x=0: #{i : t_i(0)=0}, #{i : t_i(0)=1}
//   n10,n11  the same at x=1
//   c0,c1    exact quotients (k-n00-n01)/q' and (k-n10-n11)/p'
// bullets_satisfied records whether the pattern-synthesis side conditions hold
// (n00+n01 < k, n10+n11 < k, c0 > 1/eps, c1 > 1/eps).  They are guaranteed
// when min(p',q') exceeds minimum_target_bound(src, eps); below that they may
// fail, which is reported through the flag rather than an error.
struct EmbeddingIntegers {
  i64 a = 0, b = 0;
  i64 k = 0;
  i64 l0 = 0, m0 = 0, l1 = 0, m1 = 0;
  i64 n00 = 0, n01 = 0, n10 = 0, n11 = 0;
  i64 c0 = 0, c1 = 0;
  bool bullets_satisfied = false;
};

// Unique (a,b) with 0<=a<q, 0<=b<p and p*a + q*b = p'*q' (mod p*q).
// For a prime source the congruence always has a solution; nullopt is kept in
// the signature as the non-embeddability signal for callers probing raw pairs.
std::optional<std::pair<i64, i64>> remainder_indices(
    const DimensionDropAlgebra& src, const DimensionDropAlgebra& tgt);

// ceil(p*q*(1/eps + 2)); any target with min(p',q') above this admits an
// embedding pattern with variation < eps.  Sufficient, not necessary.
i64 minimum_target_bound(const DimensionDropAlgebra& src, double eps);

// Derives the full integer family for src -> tgt.  Throws NoSolution when the
// forced (a,b) leaves a negative k (target too small to receive even the
// boundary representations).
EmbeddingIntegers derive_embedding_integers(const DimensionDropAlgebra& src,
                                            const DimensionDropAlgebra& tgt,
                                            double eps);

}  // namespace ddrop
