#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <functional>
#include <random>
#include <vector>

#include "ddrop/config.hpp"
#include "ddrop/error.hpp"
#include "ddrop/hom.hpp"

using namespace ddrop;

namespace {

std::string thrown_code(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return "";
}

// Scalar element g(t) * 1_{pq} from a real PL graph.
Element scalar_element(const DimensionDropAlgebra& alg,
                       const std::vector<Knot>& graph) {
  std::vector<double> ks;
  std::vector<Mat> vals;
  const auto n = alg.matrix_size();
  for (const auto& kn : graph) {
    ks.push_back(kn.x);
    vals.push_back(kn.y * Mat::Identity(static_cast<i64>(n), static_cast<i64>(n)));
  }
  return make_element(alg, std::move(ks), std::move(vals));
}

std::vector<double> sorted_real_eigs(const Mat& m) {
  Eigen::SelfAdjointEigenSolver<Mat> es(m, Eigen::EigenvaluesOnly);
  std::vector<double> out(es.eigenvalues().data(),
                          es.eigenvalues().data() + es.eigenvalues().size());
  std::sort(out.begin(), out.end());
  return out;
}

Mat random_unitary(i64 n, unsigned long long seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  Mat a(n, n);
  for (i64 i = 0; i < n; ++i)
    for (i64 j = 0; j < n; ++j) a(i, j) = Cplx(g(rng), g(rng));
  Eigen::HouseholderQR<Mat> qr(a);
  Mat q = qr.householderQ();
  return q;
}

double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace

TEST_CASE("boundary grouping permutation flattens the diagonal exactly") {
  DimensionDropAlgebra src(2, 3), tgt(5, 7);
  Homomorphism h = synthesize_embedding(src, tgt, 1.0);
  CHECK(h.a == 1);
  CHECK(h.b == 1);
  CHECK(h.pattern.size() == 5);

  for (const auto& g : standard_generators(src)) {
    Mat at0 = evaluate(h, g, 0.0);
    Mat at1 = evaluate(h, g, 1.0);
    CHECK(left_residual(at0, 5, 7) < 1e-12);
    CHECK(right_residual(at1, 5, 7) < 1e-12);
    // Conjugation preserves spectra: compare with the raw block multiset.
    BlockList bl = hom_blocks(h, g, 0.0);
    std::vector<double> expected;
    for (size_t i = 0; i < bl.blocks.size(); ++i) {
      auto eigs = sorted_real_eigs(Mat(0.5 * (bl.blocks[i] + bl.blocks[i].adjoint())));
      for (i128 c = 0; c < bl.mults[i]; ++c)
        expected.insert(expected.end(), eigs.begin(), eigs.end());
    }
    std::sort(expected.begin(), expected.end());
    auto actual = sorted_real_eigs(Mat(0.5 * (at0 + at0.adjoint())));
    REQUIRE(actual.size() == expected.size());
    for (size_t i = 0; i < actual.size(); ++i)
      CHECK(std::abs(actual[i] - expected[i]) < 1e-9);
  }
}

TEST_CASE("scalar elements conjugate to the documented eigenvalue multiset") {
  DimensionDropAlgebra src(2, 3), tgt(5, 7);
  Homomorphism h = synthesize_embedding(src, tgt, 1.0);
  std::vector<Knot> graph{{0.0, 0.15}, {0.4, 0.9}, {1.0, 0.35}};
  Element f = scalar_element(src, graph);
  auto g = [&](double t) { return eval_graph(graph, t); };

  std::mt19937_64 rng(20240817);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    double s = trial == 0 ? 0.0 : (trial == 1 ? 1.0 : uni(rng));
    std::vector<double> expected;
    expected.insert(expected.end(), 2, g(0.0));  // a * p copies
    expected.insert(expected.end(), 3, g(1.0));  // b * q copies
    for (size_t i = 0; i < h.pattern.maps.size(); ++i)
      for (i128 c = 0; c < h.pattern.mults[i] * 6; ++c)
        expected.push_back(g(h.pattern.maps[i](s)));
    std::sort(expected.begin(), expected.end());
    auto actual = sorted_real_eigs(evaluate(h, f, s));
    REQUIRE(actual.size() == expected.size());
    for (size_t i = 0; i < actual.size(); ++i)
      CHECK(std::abs(actual[i] - expected[i]) < 1e-9);
  }
}

TEST_CASE("identity embedding acts as the identity") {
  DimensionDropAlgebra alg(2, 3);
  Homomorphism h = identity_hom(alg);
  CHECK(h.a == 0);
  CHECK(h.b == 0);
  CHECK(h.pattern.size() == 1);

  Element f = random_element(alg, 7001, 2);
  for (double s : {0.0, 0.25, 0.5, 0.77, 1.0})
    CHECK(opnorm(evaluate(h, f, s) - eval(f, s)) < 1e-13);

  MorphismReport rep = verify_morphism(h, standard_generators(alg), 21);
  CHECK(rep.max_defect() <= 1e-12);
  CHECK(rep.boundary_certified);

  // synthesize_embedding short-circuits to the identity on equal algebras
  Homomorphism h2 = synthesize_embedding(alg, alg, 2.0);
  CHECK(h2.pattern.size() == 1);
  CHECK(opnorm(evaluate(h2, f, 0.41) - eval(f, 0.41)) < 1e-13);
}

TEST_CASE("synthesized embedding verifies within the boundary tolerance") {
  DimensionDropAlgebra src(2, 3), tgt(19, 23);
  Homomorphism h = synthesize_embedding(src, tgt, 1.0);
  CHECK(h.a == 1);
  CHECK(h.b == 1);
  CHECK(h.pattern.size() == 72);
  CHECK(variation(h.pattern) < 1.0);

  MorphismReport rep = verify_morphism(h, standard_generators(src), kDefaultGrid);
  CHECK(rep.max_defect() <= 1e-9);
  CHECK(rep.boundary_certified);
  CHECK_FALSE(rep.structural_only);

  // tighter tolerance: variation shrinks accordingly
  Homomorphism fine = synthesize_embedding(src, tgt, 0.6);
  CHECK(variation(fine.pattern) < 0.6);
  CHECK(verify_morphism(fine, standard_generators(src), 41).max_defect() <= 1e-9);
}

TEST_CASE("corrupting the unitary is flagged by the report") {
  DimensionDropAlgebra src(2, 3), tgt(5, 7);
  Homomorphism h = synthesize_embedding(src, tgt, 1.0);
  Mat bad = Mat::Identity(35, 35);
  bad(34, 34) = Cplx(1.1, 0.0);  // non-unitary knot, inside a nonzero block
  Homomorphism broken = make_homomorphism(src, tgt, h.a, h.b, h.pattern,
                                          UnitaryPath::constant(bad));
  MorphismReport rep = verify_morphism(broken, standard_generators(src), 21);
  CHECK(rep.unitarity > 0.05);
  CHECK(rep.multiplicativity > 1e-3);
  CHECK(rep.max_defect() > 0.05);
}

TEST_CASE("conjugation by a constant unitary leaves algebraic defects unchanged") {
  DimensionDropAlgebra src(2, 3), tgt(5, 7);
  Homomorphism h = synthesize_embedding(src, tgt, 1.0);
  Homomorphism twisted = make_homomorphism(
      src, tgt, h.a, h.b, h.pattern,
      UnitaryPath::product(UnitaryPath::constant(random_unitary(35, 99)), h.u));
  auto gens = standard_generators(src);
  MorphismReport r1 = verify_morphism(h, gens, 21);
  MorphismReport r2 = verify_morphism(twisted, gens, 21);
  CHECK(std::abs(r1.multiplicativity - r2.multiplicativity) <= 1e-12);
  CHECK(std::abs(r1.adjoint - r2.adjoint) <= 1e-12);
  CHECK(std::abs(r1.linearity - r2.linearity) <= 1e-12);
  CHECK(std::abs(r1.unitality - r2.unitality) <= 1e-12);
  CHECK(std::abs(r1.unitarity - r2.unitarity) <= 1e-11);
}

TEST_CASE("trace of the evaluation matches the weighted block formula") {
  DimensionDropAlgebra src(2, 3), tgt(19, 23);
  Homomorphism h = synthesize_embedding(src, tgt, 1.0);
  for (unsigned long long seed : {11ull, 12ull, 13ull}) {
    Element f = random_element(src, seed, 2);
    for (int j = 0; j <= 10; ++j) {
      double s = j / 10.0;
      Cplx direct = normalized_trace(evaluate(h, f, s));
      BlockList bl = hom_blocks(h, f, s);
      Cplx formula = 0.0;
      for (size_t i = 0; i < bl.blocks.size(); ++i)
        formula += static_cast<double>(static_cast<i64>(bl.mults[i])) *
                   static_cast<double>(bl.blocks[i].rows()) *
                   normalized_trace(bl.blocks[i]);
      formula /= static_cast<double>(19 * 23);
      CHECK(std::abs(direct - formula) < 1e-12);
    }
  }
}

TEST_CASE("quantile-coupled embedding preserves the trace") {
  DimensionDropAlgebra src(2, 3), tgt(19, 24);
  Measure leb = Measure::lebesgue();
  Homomorphism h = synthesize_embedding(src, tgt, 0.6, leb, leb);
  CHECK(h.a == 0);
  CHECK(h.b == 0);

  // pulled-back trace agrees with the source trace as a measure
  Measure pulled = pullback_trace(h, leb);
  for (int j = 0; j <= 40; ++j) {
    double x = j / 40.0;
    CHECK(std::abs(pulled.total_cdf(x) - leb.total_cdf(x)) < 1e-9);
  }

  // matrix-level oracle: integrate the normalized trace of the dense
  // evaluation. The integrand is PL in s; the breakpoint set comes from the
  // composed trace graphs, the values from full conjugations.
  Element f = make_element(
      src, {0.0, 1.0},
      {Mat::Identity(6, 6) * 0.2, Mat::Identity(6, 6) * 0.9});
  std::vector<double> breaks{0.0, 1.0};
  for (const auto& t : h.pattern.maps)
    for (const auto& kn : compose_unclamped(trace_graph(f), t))
      breaks.push_back(kn.x);
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end(),
                           [](double a, double b) { return std::abs(a - b) < 1e-12; }),
               breaks.end());
  double oracle = 0.0, prev_x = breaks[0];
  double prev_v = normalized_trace(evaluate(h, f, prev_x)).real();
  for (size_t i = 1; i < breaks.size(); ++i) {
    double v = normalized_trace(evaluate(h, f, breaks[i])).real();
    oracle += 0.5 * (v + prev_v) * (breaks[i] - prev_x);
    prev_x = breaks[i];
    prev_v = v;
  }
  CHECK(std::abs(hom_trace(h, f, leb) - oracle) < 1e-9);
  CHECK(std::abs(trace_value(leb, f) - oracle) < 1e-9);

  // random PL elements: closed form against the source trace
  for (unsigned long long seed : {31ull, 32ull, 33ull, 34ull}) {
    Element r = random_element(src, seed, 3);
    CHECK(std::abs(hom_trace(h, r, leb) - trace_value(leb, r)) < 1e-9);
  }

  // the coupled pattern still verifies as a morphism
  MorphismReport rep = verify_morphism(h, standard_generators(src), 41);
  CHECK(rep.max_defect() <= 1e-9);
  CHECK(rep.boundary_certified);
}

TEST_CASE("trace variant refuses unusable inputs") {
  DimensionDropAlgebra src(2, 3);
  Measure leb = Measure::lebesgue();
  // corner remainders nonzero: 6 does not divide 19*23
  CHECK(thrown_code([&] {
          synthesize_embedding(src, DimensionDropAlgebra(19, 23), 0.6, leb,
                               std::optional<Measure>(leb));
        }) == "TraceVariantUnavailable");
  // atom in the target trace
  Measure atomic =
      mix({{0.5, leb}, {0.5, Measure::point(0.5)}});
  CHECK(thrown_code([&] {
          synthesize_embedding(src, DimensionDropAlgebra(19, 24), 0.6, leb,
                               std::optional<Measure>(atomic));
        }) == "TraceVariantUnavailable");
  // too small at this tolerance
  CHECK(thrown_code([&] {
          synthesize_embedding(src, DimensionDropAlgebra(5, 7), 0.5);
        }) == "TargetTooSmall");
  // no admissible integers at all
  CHECK(thrown_code([&] {
          synthesize_embedding(DimensionDropAlgebra(5, 7),
                               DimensionDropAlgebra(2, 3), 1.0);
        }) == "NoSolution");
  CHECK(thrown_code([&] {
          synthesize_embedding(src, DimensionDropAlgebra(19, 24), 0.0);
        }) == "NonPositive");
}

TEST_CASE("atom-bearing source traces couple through plateaus") {
  DimensionDropAlgebra src(2, 3), tgt(19, 24);
  Measure leb = Measure::lebesgue();
  Measure tau_src = mix({{0.6, leb}, {0.4, Measure::point(0.37)}});
  Homomorphism h = synthesize_embedding(src, tgt, 0.6, tau_src, leb);
  Measure pulled = pullback_trace(h, leb);
  for (int j = 0; j <= 50; ++j) {
    double x = j / 50.0;
    CHECK(std::abs(pulled.total_cdf(x) - tau_src.total_cdf(x)) < 1e-9);
  }
  for (unsigned long long seed : {41ull, 42ull}) {
    Element r = random_element(src, seed, 2);
    CHECK(std::abs(hom_trace(h, r, leb) - trace_value(tau_src, r)) < 1e-9);
  }
}

TEST_CASE("corrective unitary for equal embeddings is trivial") {
  DimensionDropAlgebra src(2, 3), tgt(19, 23);
  Homomorphism h = synthesize_embedding(src, tgt, 0.6);
  REQUIRE(h.pattern.normalized);
  auto gens = standard_generators(src);
  CorrectiveResult res = corrective_unitary(h, h, gens, 0.6, 41);
  CHECK(res.exact_conjugacy);
  CHECK(res.max_defect <= 1e-12);
  CHECK(res.median_defect <= 1e-12);
  for (double s : {0.0, 0.3, 1.0})
    CHECK(opnorm(res.w.at(s) - Mat::Identity(437, 437)) < 1e-9);
}

TEST_CASE("corrective unitary recovers a constant twist exactly") {
  DimensionDropAlgebra src(2, 3), tgt(19, 23);
  Homomorphism h1 = synthesize_embedding(src, tgt, 0.6);
  // unitary element of the target: boundary-compatible knot path
  Mat c0 = kron(random_unitary(19, 5), Mat::Identity(23, 23));
  Mat c1 = kron(Mat::Identity(19, 19), random_unitary(23, 6));
  UnitaryPath c = UnitaryPath::knots({0.0, 1.0}, {c0, c1});
  Homomorphism h2 = make_homomorphism(src, tgt, h1.a, h1.b, h1.pattern,
                                      UnitaryPath::product(c, h1.u));

  auto gens = standard_generators(src);
  CorrectiveResult res = corrective_unitary(h1, h2, gens, 0.6, 41);
  CHECK(res.exact_conjugacy);
  CHECK(res.max_defect <= 1e-12);
  for (double s : {0.0, 0.25, 0.6, 1.0})
    CHECK(opnorm(res.w.at(s) - c.at(s)) < 1e-12);
  CHECK(left_residual(res.w.at(0.0), 19, 23) < 1e-9);
  CHECK(right_residual(res.w.at(1.0), 19, 23) < 1e-9);
}

TEST_CASE("perturbed patterns stay within the corrective budget") {
  DimensionDropAlgebra src(2, 3), tgt(19, 23);
  const double eps = 0.6;
  Homomorphism h1 = synthesize_embedding(src, tgt, eps);
  auto gens = standard_generators(src);
  double minmod = 1.0;
  for (const auto& g : gens) minmod = std::min(minmod, modulus_of_continuity(g, eps));
  const double d = minmod / 2.5;

  // common monotone reparametrization: preserves order, pins, and censuses
  PLMap phi({{0.0, 0.0}, {0.31, 0.31 + d}, {0.74, 0.74 - d}, {1.0, 1.0}});
  std::vector<PLMap> maps;
  for (const auto& t : h1.pattern.maps) maps.push_back(compose_pl(phi, t));
  EigenvaluePattern pat2 = make_pattern(std::move(maps), h1.pattern.mults,
                                        h1.pattern.normalized);
  REQUIRE(pattern_distance(h1.pattern, pat2) < minmod);
  Homomorphism h2 = make_homomorphism(
      src, tgt, h1.a, h1.b, pat2,
      boundary_grouping_path(src, tgt, h1.a, h1.b, pat2));

  CHECK(corrective_defect_bound(h1.pattern, pat2, gens, eps) ==
        doctest::Approx(5 * eps));
  CorrectiveResult res = corrective_unitary(h1, h2, gens, eps, kDefaultGrid);
  CHECK(res.exact_conjugacy);  // canonical layouts coincide
  CHECK(res.max_defect < 5 * eps);
  CHECK(res.median_defect < 2 * eps);
  CHECK(res.median_defect <= res.max_defect);
  CHECK(res.max_defect > 1e-6);  // the patterns genuinely differ
}

TEST_CASE("five-segment corrective handles a one-sided twist") {
  DimensionDropAlgebra src(2, 3), tgt(19, 23);
  const double eps = 0.6;
  Homomorphism h1 = synthesize_embedding(src, tgt, eps);
  // twist that reaches a non-scalar left-corner unitary at s=1
  Mat cend = kron(random_unitary(19, 77), Mat::Identity(23, 23));
  UnitaryPath c = UnitaryPath::knots({0.0, 1.0}, {Mat::Identity(437, 437), cend});
  Homomorphism h2 = make_homomorphism(src, tgt, h1.a, h1.b, h1.pattern,
                                      UnitaryPath::product(c, h1.u));
  // cend is in M_19 (x) 1, not 1 (x) M_23, so w = u2 u1* fails the boundary
  // at s=1 and the commutant route must engage.
  std::vector<Element> gens{standard_generators(src)[0],
                            standard_generators(src)[1]};
  CorrectiveResult res = corrective_unitary(h1, h2, gens, eps, 41);
  CHECK_FALSE(res.exact_conjugacy);
  CHECK(res.delta > 0.0);
  CHECK(res.max_defect < 5 * eps);
  // boundary membership of the corrective path
  CHECK(left_residual(res.w.at(0.0), 19, 23) < 1e-9);
  CHECK(right_residual(res.w.at(1.0), 19, 23) < 1e-9);
  // tail commutant segment commutes with the generator images at 1
  for (const auto& g : gens) {
    Mat img = evaluate(h1, g, 1.0);
    Mat ws = res.w.at(1.0 - res.delta / 4.0);
    CHECK(opnorm(ws * img - img * ws) < 1e-9);
  }
}

TEST_CASE("corrective rejects far patterns and mismatched data") {
  DimensionDropAlgebra src(2, 3), tgt(19, 23);
  Homomorphism h1 = synthesize_embedding(src, tgt, 0.6);
  auto gens = standard_generators(src);
  // far: reparametrize by a large shift against a tiny tolerance
  PLMap phi({{0.0, 0.0}, {0.5, 0.8}, {1.0, 1.0}});
  std::vector<PLMap> maps;
  for (const auto& t : h1.pattern.maps) maps.push_back(compose_pl(phi, t));
  EigenvaluePattern far = make_pattern(std::move(maps), h1.pattern.mults, true);
  CHECK(thrown_code([&] {
          corrective_defect_bound(h1.pattern, far, gens, 0.05);
        }) == "PatternsTooFar");
  CHECK(thrown_code([&] {
          EigenvaluePattern un = h1.pattern;
          un.normalized = false;
          corrective_defect_bound(un, h1.pattern, gens, 0.6);
        }) == "NotNormalized");
  CHECK(thrown_code([&] {
          corrective_defect_bound(h1.pattern, h1.pattern, {}, 0.6);
        }) == "EmptySet");
}

TEST_CASE("composition lifts the inner unitary exactly") {
  DimensionDropAlgebra a(2, 3), b(5, 7), cdim(35, 12);
  Homomorphism h1 = synthesize_embedding(a, b, 1.0);
  Homomorphism h2 = synthesize_embedding(b, cdim, 1.0);
  REQUIRE(h2.a == 0);
  REQUIRE(h2.b == 0);
  Homomorphism comp = compose_homs(h2, h1);
  CHECK(comp.source == a);
  CHECK(comp.target == cdim);
  CHECK(comp.a == static_cast<i64>(h2.pattern.size()) * h1.a);
  CHECK(comp.b == static_cast<i64>(h2.pattern.size()) * h1.b);
  CHECK(comp.pattern.size() == h1.pattern.size() * h2.pattern.size());

  // oracle: apply h2's conjugated block layout to the matrices h1 produces
  std::vector<const PLMap*> outer;
  for (size_t j = 0; j < h2.pattern.maps.size(); ++j)
    for (i128 ccount = 0; ccount < h2.pattern.mults[j]; ++ccount)
      outer.push_back(&h2.pattern.maps[j]);
  for (unsigned long long seed : {51ull, 52ull}) {
    Element f = random_element(a, seed, 2);
    for (double s : {0.0, 0.33, 0.71, 1.0}) {
      std::vector<Mat> blocks;
      for (const PLMap* t : outer) blocks.push_back(evaluate(h1, f, (*t)(s)));
      Mat u2 = h2.u.at(s);
      Mat expected = u2 * blockdiag(blocks) * u2.adjoint();
      CHECK(opnorm(evaluate(comp, f, s) - expected) < 1e-10);
    }
  }

  MorphismReport rep = verify_morphism(comp, standard_generators(a), 21);
  CHECK(rep.max_defect() <= 1e-9);
  CHECK(rep.boundary_certified);

  CHECK(thrown_code([&] { compose_homs(h1, h2); }) == "ChainMismatch");
  // outer corner multiplicities nonzero: h1 has a = b = 1
  CHECK(thrown_code([&] { compose_homs(h1, identity_hom(a)); }) ==
        "ChainMismatch");
}

TEST_CASE("implicit paths produce structural certificates") {
  DimensionDropAlgebra src(2, 3), tgt(1829, 2280);
  Homomorphism h = synthesize_embedding(src, tgt, 0.25);
  CHECK_FALSE(h.u.concrete());
  MorphismReport rep = verify_morphism(h, standard_generators(src), 11);
  CHECK(rep.structural_only);
  CHECK(rep.boundary_certified);
  CHECK(rep.max_defect() == 0.0);
  CHECK(variation(h.pattern) < 0.25);
  CHECK(thrown_code([&] { evaluate(h, random_element(src, 3, 1), 0.5); }) ==
        "Overflow");
}

TEST_CASE("evaluate guards dimensions and parameters") {
  DimensionDropAlgebra src(2, 3), tgt(5, 7), other(3, 4);
  Homomorphism h = synthesize_embedding(src, tgt, 1.0);
  CHECK(thrown_code([&] { evaluate(h, random_element(other, 1, 1), 0.5); }) ==
        "DimensionMismatch");
  CHECK(thrown_code([&] { evaluate(h, random_element(src, 1, 1), 1.5); }) ==
        "ParseError");
  CHECK(thrown_code([&] {
          make_homomorphism(src, tgt, 2, 1, h.pattern, h.u);
        }) == "DimensionMismatch");
  CHECK(max_abs({}) == 0.0);
}
