#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "ddrop/element.hpp"
#include "ddrop/error.hpp"
#include "ddrop/katetov.hpp"
#include "katetov_instances.hpp"

using namespace ddrop;
using ddrop_testing::run_katetov_instance;
using ddrop_testing::shift_element;

namespace {

std::string thrown_code(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return "";
}

Mat random_unitary(int n, unsigned long long seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  Mat a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = Cplx(g(rng), g(rng));
  return Eigen::HouseholderQR<Mat>(a).householderQ();
}

Element scalar_path(const DimensionDropAlgebra& alg, std::vector<double> xs,
                    std::vector<double> ys) {
  std::vector<Mat> vals;
  i64 n = static_cast<i64>(alg.matrix_size());
  for (double y : ys) vals.push_back(y * Mat::Identity(n, n));
  return make_element(alg, std::move(xs), std::move(vals));
}

// The two-step chain used by the composition identity: (1,1) -> (1,2) -> (1,6)
// with identity unitaries, so images stay piecewise linear.
struct Chain {
  DimensionDropAlgebra a{1, 1}, b{1, 2}, c{1, 6};
  Homomorphism iota, eta;
  Chain()
      : iota(make_homomorphism(
            a, b, 0, 0,
            make_pattern({PLMap::line(0.0, 1.0),
                          PLMap({{0.0, 0.0}, {0.7, 0.35}, {1.0, 0.9}})}),
            UnitaryPath::identity(2))),
        eta(make_homomorphism(
            b, c, 0, 0,
            make_pattern({PLMap::line(0.0, 1.0),
                          PLMap({{0.0, 0.0}, {0.5, 0.8}, {1.0, 0.2}}),
                          PLMap::line(0.0, 0.6)}),
            UnitaryPath::identity(6))) {}
};

}  // namespace

TEST_CASE("identity pair reproduces the distance matrix") {
  DimensionDropAlgebra alg(2, 3);
  auto gens = standard_generators(alg);
  auto je = make_joint_embedding(identity_hom(alg), identity_hom(alg),
                                 Measure::lebesgue());
  SampledBiKatetov phi = phi_from_pair(je, gens, gens, 11);
  CHECK(phi.correction == 0.0);
  CHECK(katetov_defect(phi) <= 1e-12);
  for (size_t i = 0; i < gens.size(); ++i) {
    CHECK(phi.values[i][i] <= 1e-13);
    for (size_t j = 0; j < gens.size(); ++j)
      CHECK(std::abs(phi.values[i][j] - distance(gens[i], gens[j])) <= 1e-12);
  }
}

TEST_CASE("disjoint constants keep their exact gap") {
  Chain ch;
  Element zero = scalar_path(ch.a, {0.0, 1.0}, {0.0, 0.0});
  Element one = scalar_path(ch.b, {0.0, 1.0}, {1.0, 1.0});
  auto je = make_joint_embedding(
      compose_homs(ch.eta, ch.iota),
      make_homomorphism(ch.b, ch.c, 0, 0,
                        make_pattern({PLMap::line(0.0, 1.0),
                                      PLMap::line(0.0, 1.0),
                                      PLMap::line(0.0, 1.0)}),
                        UnitaryPath::identity(6)),
      Measure::lebesgue());
  SampledBiKatetov phi = phi_from_pair(je, {zero}, {one}, 5);
  CHECK(phi.values[0][0] == 1.0);
  CHECK(phi.correction == 0.0);
}

TEST_CASE("grid path certifies an upper bound and stays bi-Katetov") {
  DimensionDropAlgebra src(2, 3), tgt(5, 7);
  Homomorphism iota = synthesize_embedding(src, tgt, 1.0);
  auto je = make_joint_embedding(iota, identity_hom(tgt), Measure::lebesgue());
  std::vector<Element> left = standard_generators(src);
  std::vector<Element> right = {random_element(tgt, 11, 2),
                                random_element(tgt, 12, 1)};
  SampledBiKatetov coarse = phi_from_pair(je, left, right, 41);
  SampledBiKatetov fine = phi_from_pair(je, left, right, 161);
  CHECK(coarse.correction > 0.0);
  CHECK(katetov_defect(coarse) <= 1e-12);
  CHECK(katetov_defect(fine) <= 1e-12);
  // a finer raw grid sup never exceeds the coarse certified value
  for (size_t i = 0; i < left.size(); ++i)
    for (size_t j = 0; j < right.size(); ++j)
      CHECK(fine.values[i][j] - fine.correction <=
            coarse.values[i][j] + 1e-13);
}

TEST_CASE("non-covering embeddings are refused") {
  DimensionDropAlgebra one(1, 1);
  Homomorphism point_eval = make_homomorphism(
      one, one, 0, 0, make_pattern({PLMap::constant(0.5)}),
      UnitaryPath::identity(1));
  auto je = make_joint_embedding(point_eval, identity_hom(one),
                                 Measure::lebesgue());
  Element f = random_element(one, 3, 1);
  CHECK(thrown_code([&] { phi_from_pair(je, {f}, {f}, 5); }) ==
        "DimensionMismatch");
  CHECK(thrown_code([&] { phi_from_pair(je, {}, {f}, 5); }) == "EmptySet");
  CHECK(thrown_code([&] { phi_from_pair(je, {f}, {f}, 1); }) == "ParseError");
}

TEST_CASE("image through a moving path is refused") {
  DimensionDropAlgebra src(2, 3), tgt(5, 7);
  Homomorphism h = synthesize_embedding(src, tgt, 1.0);
  CHECK(h.u.lipschitz_bound() > 0.0);
  Element f = random_element(src, 5, 1);
  CHECK(thrown_code([&] { image_element(h, f); }) == "ParseError");
}

TEST_CASE("singleton zero map extends by pure distances") {
  DimensionDropAlgebra alg(1, 2);
  Element a = random_element(alg, 21, 1);
  Element b = random_element(alg, 22, 2);
  SampledBiKatetov phi = make_bikatetov({a}, {b}, {{0.0}});
  Element a2 = random_element(alg, 23, 1);
  Element b2 = random_element(alg, 24, 1);
  SampledBiKatetov ext = extend_trivial(phi, {a2}, {b2});
  CHECK(std::abs(ext.values[1][1] - (distance(a2, a) + distance(b, b2))) <=
        1e-14);
  CHECK(std::abs(ext.values[0][1] - distance(b, b2)) <= 1e-14);
  CHECK(std::abs(ext.values[1][0] - distance(a2, a)) <= 1e-14);
  CHECK(katetov_defect(ext) <= 1e-12);
}

TEST_CASE("explicit value matrices are validated") {
  DimensionDropAlgebra alg(1, 1);
  Element a = scalar_path(alg, {0.0, 1.0}, {0.0, 0.0});
  Element b = scalar_path(alg, {0.0, 1.0}, {1.0, 1.0});
  CHECK(thrown_code([&] { make_bikatetov({a, b}, {a}, {{0.0}, {0.0}}); }) ==
        "ParseError");
  CHECK(thrown_code([&] { make_bikatetov({a}, {b}, {{-0.5}}); }) ==
        "ParseError");
  CHECK(thrown_code([&] { make_bikatetov({a}, {b}, {{0.0, 1.0}}); }) ==
        "DimensionMismatch");
  // an infinite entry is legitimate
  SampledBiKatetov inf_map = make_bikatetov({a}, {b}, {{kInfValue}});
  CHECK(katetov_defect(inf_map) == 0.0);
}

TEST_CASE("composition over embedded images reproduces the composite") {
  Chain ch;
  std::mt19937_64 rng(7);
  std::vector<Element> asamples;
  for (int i = 0; i < 3; ++i) asamples.push_back(random_element(ch.a, rng(), 2));
  std::vector<Element> bsamples;
  for (const Element& f : asamples)
    bsamples.push_back(image_element(ch.iota, f));
  bsamples.push_back(random_element(ch.b, rng(), 1));
  std::vector<Element> csamples = {random_element(ch.c, rng(), 1),
                                   random_element(ch.c, rng(), 2)};

  auto je1 = make_joint_embedding(ch.iota, identity_hom(ch.b), Measure::lebesgue());
  auto je2 = make_joint_embedding(ch.eta, identity_hom(ch.c), Measure::lebesgue());
  SampledBiKatetov phi1 = phi_from_pair(je1, asamples, bsamples, 5);
  SampledBiKatetov phi2 = phi_from_pair(je2, bsamples, csamples, 5);
  SampledBiKatetov comp = compose_apx(phi1, phi2);

  Homomorphism through = compose_homs(ch.eta, ch.iota);
  auto jec = make_joint_embedding(through, identity_hom(ch.c), Measure::lebesgue());
  SampledBiKatetov direct = phi_from_pair(jec, asamples, csamples, 5);
  for (size_t i = 0; i < asamples.size(); ++i)
    for (size_t k = 0; k < csamples.size(); ++k)
      CHECK(std::abs(comp.values[i][k] - direct.values[i][k]) <= 1e-12);

  // zero diagonal: composing with itself cannot exceed the original
  auto jeb = make_joint_embedding(identity_hom(ch.b), identity_hom(ch.b),
                                  Measure::lebesgue());
  SampledBiKatetov square = phi_from_pair(jeb, bsamples, bsamples, 5);
  SampledBiKatetov twice = compose_apx(square, square);
  for (size_t i = 0; i < bsamples.size(); ++i)
    for (size_t k = 0; k < bsamples.size(); ++k)
      CHECK(twice.values[i][k] <= square.values[i][k] + 1e-14);

  // an all-infinite second factor wipes out the composite
  std::vector<std::vector<double>> inf_vals(
      bsamples.size(), std::vector<double>(csamples.size(), kInfValue));
  SampledBiKatetov allinf = make_bikatetov(bsamples, csamples, inf_vals);
  SampledBiKatetov wiped = compose_apx(phi1, allinf);
  for (const auto& row : wiped.values)
    for (double v : row) CHECK(std::isinf(v));

  CHECK(thrown_code([&] { compose_apx(phi2, phi1); }) == "MiddleMismatch");
  std::vector<Element> other = {random_element(ch.b, 99, 1),
                                random_element(ch.b, 98, 1),
                                random_element(ch.b, 97, 1),
                                random_element(ch.b, 96, 1)};
  SampledBiKatetov shifted_mid = phi_from_pair(je2, other, csamples, 5);
  CHECK(thrown_code([&] { compose_apx(phi1, shifted_mid); }) ==
        "MiddleMismatch");
}

TEST_CASE("totality defect distinguishes image-rich sample sets") {
  Chain ch;
  std::vector<Element> left;
  std::mt19937_64 rng(31);
  for (int i = 0; i < 3; ++i) left.push_back(random_element(ch.a, rng(), 1));
  auto je = make_joint_embedding(ch.iota, identity_hom(ch.b), Measure::lebesgue());

  std::vector<Element> rich;
  for (const Element& f : left) rich.push_back(image_element(ch.iota, f));
  SampledBiKatetov phi_rich = phi_from_pair(je, left, rich, 5);
  CHECK(totality_defect(phi_rich, {0, 1, 2}) == 0.0);

  // small sources against a distant constant: every value stays large
  std::vector<Element> small;
  for (int i = 0; i < 2; ++i) {
    Element f = random_element(ch.a, rng(), 1);
    for (Mat& v : f.values) v *= 0.1;
    small.push_back(make_element(ch.a, f.knots, f.values));
  }
  Element far = scalar_path(ch.b, {0.0, 1.0}, {1.0, 1.0});
  SampledBiKatetov phi_far = phi_from_pair(je, small, {far}, 5);
  CHECK(totality_defect(phi_far, {0, 1}) >= 0.3);

  // recomputing with the images appended restores totality exactly
  std::vector<Element> patched = {far};
  for (const Element& f : small) patched.push_back(image_element(ch.iota, f));
  SampledBiKatetov phi_patched = phi_from_pair(je, small, patched, 5);
  CHECK(totality_defect(phi_patched, {0, 1}) == 0.0);

  CHECK(thrown_code([&] { totality_defect(phi_rich, {}); }) == "EmptySubset");
  CHECK(thrown_code([&] { totality_defect(phi_rich, {7}); }) == "ParseError");
}

TEST_CASE("strictness witnesses are attached and reproducible") {
  DimensionDropAlgebra alg(2, 3);
  std::mt19937_64 rng(41);
  std::vector<Element> left = {random_element(alg, rng(), 1),
                               random_element(alg, rng(), 2)};
  std::vector<Element> right = {random_element(alg, rng(), 1)};
  auto je = make_joint_embedding(identity_hom(alg), identity_hom(alg),
                                 Measure::lebesgue());
  SampledBiKatetov phi = phi_from_pair(je, left, right, 5);
  CHECK(!strictness_witness(phi).has_value());

  Element nl = random_element(alg, rng(), 1);
  Element nr = random_element(alg, rng(), 1);
  SampledBiKatetov strong = extend_with_margin(phi, {nl}, {nr}, 0.1);
  auto w = strictness_witness(strong);
  REQUIRE(w.has_value());
  CHECK(w->eps == 0.1);
  SampledBiKatetov rebuilt = extend_trivial(w->psi, {nl}, {nr});
  for (size_t i = 0; i < strong.left.size(); ++i)
    for (size_t j = 0; j < strong.right.size(); ++j)
      CHECK(std::abs(rebuilt.values[i][j] + w->eps - strong.values[i][j]) <=
            1e-14);
  CHECK(katetov_defect(strong) <= 1e-12);

  SampledBiKatetov weak = extend_with_margin(phi, {nl}, {nr}, 5e-4);
  CHECK(!strictness_witness(weak).has_value());
  CHECK(weak.note.find("below") != std::string::npos);
  CHECK(thrown_code([&] { extend_with_margin(phi, {}, {}, -0.1); }) ==
        "NonPositive");
}

TEST_CASE("dk bound for identical tuples is zero through the identity pair") {
  DimensionDropAlgebra alg(2, 3);
  GeneratorTuple tup{alg, Measure::lebesgue(),
                     {random_element(alg, 51, 2), random_element(alg, 52, 1)}};
  DkUpperResult res = dk_upper(tup, tup, SearchBudget{});
  CHECK(!res.exhausted);
  REQUIRE(res.certificate.has_value());
  CHECK(res.bound == 0.0);
}

TEST_CASE("dk recovers a hidden constant conjugation") {
  DimensionDropAlgebra alg(2, 3);
  Mat c = kron(random_unitary(2, 61), random_unitary(3, 62));
  GeneratorTuple ta{alg, Measure::lebesgue(), {}};
  GeneratorTuple tb{alg, Measure::lebesgue(), {}};
  std::mt19937_64 rng(63);
  for (int i = 0; i < 2; ++i) {
    Element f = random_element(alg, rng(), 2);
    ta.gens.push_back(f);
    std::vector<Mat> conj;
    for (const Mat& v : f.values) conj.push_back(c.adjoint() * v * c);
    tb.gens.push_back(make_element(alg, f.knots, std::move(conj)));
  }
  SearchBudget budget;
  budget.grid_n = 17;
  DkUpperResult res = dk_upper(ta, tb, budget);
  CHECK(!res.exhausted);
  CHECK(res.bound <= 1e-6);
  CHECK(res.note == "recovered conjugation");

  budget.align = false;
  DkUpperResult blind = dk_upper(ta, tb, budget);
  CHECK(blind.bound > 0.05);
}

TEST_CASE("dk on scalar tuples never exceeds the direct estimate") {
  DimensionDropAlgebra alg(2, 3);
  std::vector<double> xs = {0.0, 0.3, 0.8, 1.0};
  Element g = scalar_path(alg, xs, {0.1, 0.7, 0.2, 0.5});
  Element g2 = scalar_path(alg, xs, {0.3, 0.4, 0.6, 0.1});
  double direct = 0.0;
  for (size_t k = 0; k < xs.size(); ++k)
    direct = std::max(direct, std::abs(std::vector<double>{0.1, 0.7, 0.2, 0.5}[k] -
                                       std::vector<double>{0.3, 0.4, 0.6, 0.1}[k]));
  GeneratorTuple ta{alg, Measure::lebesgue(), {g}};
  GeneratorTuple tb{alg, Measure::lebesgue(), {g2}};
  DkUpperResult res = dk_upper(ta, tb, SearchBudget{});
  CHECK(!res.exhausted);
  CHECK(res.bound <= direct + 1e-12);
}

TEST_CASE("dk is symmetric under mirrored budgets") {
  SearchBudget budget;
  budget.align = false;
  budget.eps = 1.0;
  budget.max_dim = 40;

  DimensionDropAlgebra alg(2, 3);
  GeneratorTuple ta{alg, Measure::lebesgue(),
                    {random_element(alg, 71, 1), random_element(alg, 72, 2)}};
  GeneratorTuple tb{alg, Measure::lebesgue(),
                    {random_element(alg, 73, 2), random_element(alg, 74, 1)}};
  DkUpperResult r1 = dk_upper(ta, tb, budget);
  DkUpperResult r2 = dk_upper(tb, ta, budget);
  CHECK(std::abs(r1.bound - r2.bound) <= 1e-9);

  DimensionDropAlgebra a12(1, 2), a13(1, 3);
  GeneratorTuple tc{a12, Measure::lebesgue(), {random_element(a12, 75, 1)}};
  GeneratorTuple td{a13, Measure::lebesgue(), {random_element(a13, 76, 1)}};
  DkUpperResult r3 = dk_upper(tc, td, budget);
  DkUpperResult r4 = dk_upper(td, tc, budget);
  CHECK(!r3.exhausted);
  CHECK(std::abs(r3.bound - r4.bound) <= 1e-9);
}

TEST_CASE("dk reports budget exhaustion honestly") {
  DimensionDropAlgebra a12(1, 2), a13(1, 3);
  GeneratorTuple ta{a12, Measure::lebesgue(), {random_element(a12, 81, 1)}};
  GeneratorTuple tb{a13, Measure::lebesgue(), {random_element(a13, 82, 1)}};
  SearchBudget tiny;
  tiny.max_dim = 4;  // below the least common target dimension
  DkUpperResult res = dk_upper(ta, tb, tiny);
  CHECK(res.exhausted);
  CHECK(std::isinf(res.bound));
  CHECK(!res.certificate.has_value());
  CHECK(res.note.find("BudgetExhausted") != std::string::npos);

  GeneratorTuple longer{a13, Measure::lebesgue(),
                        {random_element(a13, 83, 1), random_element(a13, 84, 1)}};
  CHECK(thrown_code([&] { dk_upper(ta, longer, tiny); }) ==
        "DimensionMismatch");
}

TEST_CASE("randomized calculus instances hold to rounding") {
  double worst = 0.0;
  for (unsigned long long seed = 0; seed < 500; ++seed)
    worst = std::max(worst, run_katetov_instance(seed).max());
  CHECK(worst <= 1e-12);
}
