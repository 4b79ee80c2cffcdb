#include "ddrop/algebra.hpp"

#include <cmath>

namespace ddrop {

DimensionDropAlgebra::DimensionDropAlgebra(i64 p_in, i64 q_in) : p(p_in), q(q_in) {
  require(p >= 1 && q >= 1, "NonPositive",
          "dimension drop parameters must be positive, got (" +
              std::to_string(p) + "," + std::to_string(q) + ")");
  i64 g = gcd_i64(p, q);
  require(g == 1, "NotCoprime",
          "(" + std::to_string(p) + "," + std::to_string(q) +
              ") share the factor " + std::to_string(g));
}

std::string DimensionDropAlgebra::name() const {
  return "Z_{" + std::to_string(p) + "," + std::to_string(q) + "}";
}

DimensionDropAlgebra validate_pair(i64 p, i64 q) {
  return DimensionDropAlgebra(p, q);
}

std::optional<std::pair<i64, i64>> remainder_indices(
    const DimensionDropAlgebra& src, const DimensionDropAlgebra& tgt) {
  // pa + qb = p'q' (mod pq) splits into pa = p'q' (mod q), qb = p'q' (mod p),
  // each solvable uniquely because gcd(p,q)=1; CRT glues them back together.
  i128 target = static_cast<i128>(tgt.p) * tgt.q;
  i64 a = 0, b = 0;
  if (src.q > 1) {
    i64 r = static_cast<i64>(target % src.q);
    a = mulmod_i64(modinv(src.p, src.q), r, src.q);
  }
  if (src.p > 1) {
    i64 r = static_cast<i64>(target % src.p);
    b = mulmod_i64(modinv(src.q, src.p), r, src.p);
  }
  return std::make_pair(a, b);
}

i64 minimum_target_bound(const DimensionDropAlgebra& src, double eps) {
  require(eps > 0, "NonPositive", "eps must be positive");
  i64 pq = checked_mul(src.p, src.q);
  long double scaled = static_cast<long double>(pq) / eps;
  i64 ceil_part = static_cast<i64>(std::ceil(scaled));
  return checked_add(checked_mul(2, pq), ceil_part);
}

namespace {

// (big - small)/d for the boundary multiplicity formulas; exactness of the
// division is a congruence identity, so a nonzero remainder is a hard bug.
i64 exact_quotient(i128 num, i64 d, const char* what) {
  if (num % d != 0) {
    fail("NoSolution", std::string(what) + " division not exact (internal)");
  }
  return i128_to_i64(num / d);
}

}  // namespace

EmbeddingIntegers derive_embedding_integers(const DimensionDropAlgebra& src,
                                            const DimensionDropAlgebra& tgt,
                                            double eps) {
  require(eps > 0, "NonPositive", "eps must be positive");
  const i64 p = src.p, q = src.q, pt = tgt.p, qt = tgt.q;

  EmbeddingIntegers e;
  auto ab = remainder_indices(src, tgt);
  e.a = ab->first;
  e.b = ab->second;

  i128 total = static_cast<i128>(pt) * qt;
  i128 boundary = static_cast<i128>(p) * e.a + static_cast<i128>(q) * e.b;
  if (total < boundary) {
    fail("NoSolution", "target " + tgt.name() + " is too small for source " +
                           src.name() + ": p'q' < pa+qb");
  }
  e.k = exact_quotient(total - boundary, checked_mul(p, q), "pattern length");

  // Interior/boundary splitting indices: p*l0 = p' (mod q) etc.
  if (q > 1) {
    i64 pinv_q = modinv(p, q);
    e.l0 = mulmod_i64(pinv_q, pt % q, q);
    e.m0 = mulmod_i64(pinv_q, qt % q, q);
  }
  if (p > 1) {
    i64 qinv_p = modinv(q, p);
    e.l1 = mulmod_i64(qinv_p, pt % p, p);
    e.m1 = mulmod_i64(qinv_p, qt % p, p);
  }

  e.n00 = exact_quotient(static_cast<i128>(qt) * e.l0 - e.a, q, "n00");
  e.n01 = exact_quotient(static_cast<i128>(qt) * e.l1 - e.b, p, "n01");
  e.n10 = exact_quotient(static_cast<i128>(pt) * e.m0 - e.a, q, "n10");
  e.n11 = exact_quotient(static_cast<i128>(pt) * e.m1 - e.b, p, "n11");

  e.c0 = exact_quotient(static_cast<i128>(e.k) - e.n00 - e.n01, qt, "c0");
  e.c1 = exact_quotient(static_cast<i128>(e.k) - e.n10 - e.n11, pt, "c1");
  // Same quotients through the other side of the counting identity.
  i128 pq = static_cast<i128>(p) * q;
  if (static_cast<i128>(e.c0) * pq != pt - static_cast<i128>(p) * e.l0 - static_cast<i128>(q) * e.l1 ||
      static_cast<i128>(e.c1) * pq != qt - static_cast<i128>(p) * e.m0 - static_cast<i128>(q) * e.m1) {
    fail("NoSolution", "quotient cross-check failed (internal)");
  }

  e.bullets_satisfied = e.n00 + e.n01 < e.k && e.n10 + e.n11 < e.k &&
                        e.c0 > 0 && e.c1 > 0 &&
                        static_cast<double>(e.c0) * eps > 1.0 &&
                        static_cast<double>(e.c1) * eps > 1.0;

  i64 bound = minimum_target_bound(src, eps);
  if (pt > bound && qt > bound && !e.bullets_satisfied) {
    fail("BulletsUnsatisfied",
         "side conditions failed above the minimum target bound (internal)");
  }
  return e;
}

}  // namespace ddrop
