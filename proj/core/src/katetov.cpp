#include "ddrop/katetov.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>

#include "ddrop/config.hpp"
#include "ddrop/error.hpp"

namespace ddrop {

namespace {

// lhs <= rhs as an extended-real inequality; returns the violation amount.
double viol(double lhs, double rhs) {
  if (std::isinf(rhs)) return 0.0;
  if (std::isinf(lhs)) return kInfValue;
  return lhs - rhs;
}

void require_same_algebra(const std::vector<Element>& samples, const char* side) {
  for (size_t i = 1; i < samples.size(); ++i)
    require(samples[i].algebra == samples[0].algebra, "DimensionMismatch",
            std::string(side) + " samples live in different algebras");
}

std::vector<std::vector<double>> distance_matrix(const std::vector<Element>& xs) {
  size_t n = xs.size();
  std::vector<std::vector<double>> d(n, std::vector<double>(n, 0.0));
  for (size_t i = 0; i < n; ++i)
    for (size_t j = i + 1; j < n; ++j) d[i][j] = d[j][i] = distance(xs[i], xs[j]);
  return d;
}

// Union of the map images as exact intervals (PL extrema sit at knots).
bool covers_interval(const EigenvaluePattern& pat) {
  std::vector<std::pair<double, double>> iv;
  iv.reserve(pat.maps.size());
  for (const PLMap& m : pat.maps) iv.push_back({m.min_value(), m.max_value()});
  std::sort(iv.begin(), iv.end());
  double reach = 0.0;
  for (const auto& [lo, hi] : iv) {
    if (lo > reach + kTolExact) return false;
    reach = std::max(reach, hi);
  }
  return reach >= 1.0 - kTolExact;
}

bool constant_path(const UnitaryPath& u) { return u.lipschitz_bound() == 0.0; }

// Operator-norm Lipschitz bound for s -> h(f)(s).
double image_lipschitz(const Homomorphism& h, const Element& f) {
  double slope = 0.0;
  for (const PLMap& t : h.pattern.maps) slope = std::max(slope, t.max_slope());
  return 2.0 * h.u.lipschitz_bound() * sup_norm(f) + lipschitz_bound(f) * slope;
}

SampledBiKatetov core_extension(const SampledBiKatetov& phi,
                                const std::vector<Element>& new_left,
                                const std::vector<Element>& new_right) {
  auto grow = [](std::vector<Element> base, const std::vector<Element>& extra,
                 const char* side) {
    for (const Element& e : extra) {
      require(base.empty() || e.algebra == base[0].algebra, "DimensionMismatch",
              std::string(side) + " extension sample lives in the wrong algebra");
      bool dup = false;
      for (const Element& b : base)
        if (distance(e, b) <= kTolExact) {
          dup = true;
          break;
        }
      if (!dup) base.push_back(e);
    }
    return base;
  };

  SampledBiKatetov out;
  out.left = grow(phi.left, new_left, "left");
  out.right = grow(phi.right, new_right, "right");
  size_t nl = out.left.size(), nr = out.right.size();
  size_t ol = phi.left.size(), or_ = phi.right.size();

  out.dist_left = distance_matrix(out.left);
  out.dist_right = distance_matrix(out.right);
  for (size_t i = 0; i < ol; ++i)
    for (size_t j = 0; j < ol; ++j) out.dist_left[i][j] = phi.dist_left[i][j];
  for (size_t i = 0; i < or_; ++i)
    for (size_t j = 0; j < or_; ++j) out.dist_right[i][j] = phi.dist_right[i][j];

  out.values.assign(nl, std::vector<double>(nr, kInfValue));
  for (size_t i = 0; i < nl; ++i)
    for (size_t j = 0; j < nr; ++j) {
      if (i < ol && j < or_) {
        out.values[i][j] = phi.values[i][j];
        continue;
      }
      double best = kInfValue;
      for (size_t i0 = 0; i0 < ol; ++i0)
        for (size_t j0 = 0; j0 < or_; ++j0)
          best = std::min(best, out.dist_left[i][i0] + phi.values[i0][j0] +
                                    out.dist_right[j0][j]);
      out.values[i][j] = best;
    }
  out.correction = phi.correction;
  return out;
}

}  // namespace

double katetov_defect(const SampledBiKatetov& phi) {
  const auto& v = phi.values;
  const auto& dl = phi.dist_left;
  const auto& dr = phi.dist_right;
  size_t nl = phi.left.size(), nr = phi.right.size();
  double worst = 0.0;
  for (size_t i = 0; i < nl; ++i)
    for (size_t i2 = 0; i2 < nl; ++i2)
      for (size_t j = 0; j < nr; ++j) {
        worst = std::max(worst, viol(v[i][j], dl[i][i2] + v[i2][j]));
        worst = std::max(worst, viol(dl[i][i2], v[i][j] + v[i2][j]));
      }
  for (size_t j = 0; j < nr; ++j)
    for (size_t j2 = 0; j2 < nr; ++j2)
      for (size_t i = 0; i < nl; ++i) {
        worst = std::max(worst, viol(v[i][j], dr[j][j2] + v[i][j2]));
        worst = std::max(worst, viol(dr[j][j2], v[i][j] + v[i][j2]));
      }
  return worst;
}

SampledBiKatetov make_bikatetov(std::vector<Element> left,
                                std::vector<Element> right,
                                std::vector<std::vector<double>> values,
                                double tol) {
  require(!left.empty() && !right.empty(), "EmptySet",
          "sample sets must be nonempty");
  require_same_algebra(left, "left");
  require_same_algebra(right, "right");
  require(values.size() == left.size(), "DimensionMismatch",
          "value matrix has the wrong number of rows");
  for (const auto& row : values) {
    require(row.size() == right.size(), "DimensionMismatch",
            "value matrix has the wrong number of columns");
    for (double x : row)
      require(x >= 0.0 && !std::isnan(x), "ParseError",
              "values must be nonnegative");
  }
  SampledBiKatetov phi;
  phi.left = std::move(left);
  phi.right = std::move(right);
  phi.values = std::move(values);
  phi.dist_left = distance_matrix(phi.left);
  phi.dist_right = distance_matrix(phi.right);
  require(katetov_defect(phi) <= tol, "ParseError",
          "values violate the bi-Katetov inequalities");
  return phi;
}

JointEmbedding make_joint_embedding(Homomorphism iota, Homomorphism eta,
                                    Measure target_trace) {
  require(iota.target == eta.target, "DimensionMismatch",
          "the embeddings do not share a target");
  return JointEmbedding{std::move(iota), std::move(eta), std::move(target_trace)};
}

Element image_element(const Homomorphism& h, const Element& f) {
  require(constant_path(h.u), "ParseError",
          "image through a moving unitary path is not piecewise linear");
  std::vector<double> xs{0.0, 1.0};
  for (const PLMap& t : h.pattern.maps) {
    const auto& ks = t.knots();
    for (const Knot& k : ks) xs.push_back(k.x);
    for (size_t s = 0; s + 1 < ks.size(); ++s) {
      double y0 = ks[s].y, y1 = ks[s + 1].y;
      if (y0 == y1) continue;
      double lo = std::min(y0, y1), hi = std::max(y0, y1);
      for (double z : f.knots) {
        if (z <= lo || z >= hi) continue;
        xs.push_back(ks[s].x + (z - y0) / (y1 - y0) * (ks[s + 1].x - ks[s].x));
      }
    }
  }
  std::sort(xs.begin(), xs.end());
  std::vector<double> knots;
  for (double x : xs) {
    x = std::clamp(x, 0.0, 1.0);
    if (knots.empty() || x - knots.back() > kTolExact) knots.push_back(x);
  }
  if (knots.back() < 1.0) knots.back() = 1.0;
  std::vector<Mat> vals;
  vals.reserve(knots.size());
  for (double x : knots) vals.push_back(evaluate(h, f, x));
  return make_element(h.target, std::move(knots), std::move(vals));
}

SampledBiKatetov phi_from_pair(const JointEmbedding& je,
                               const std::vector<Element>& left,
                               const std::vector<Element>& right, int grid_n) {
  require(grid_n >= 2, "ParseError", "grid must have at least two points");
  require(!left.empty() && !right.empty(), "EmptySet",
          "sample sets must be nonempty");
  require(je.iota.target == je.eta.target, "DimensionMismatch",
          "the embeddings do not share a target");
  require_same_algebra(left, "left");
  require_same_algebra(right, "right");
  require(left[0].algebra == je.iota.source, "DimensionMismatch",
          "left samples do not live in the iota source");
  require(right[0].algebra == je.eta.source, "DimensionMismatch",
          "right samples do not live in the eta source");
  require(covers_interval(je.iota.pattern) && covers_interval(je.eta.pattern),
          "DimensionMismatch",
          "pattern images do not cover [0,1]; sampled distances would "
          "understate the source metric");

  SampledBiKatetov phi;
  phi.left = left;
  phi.right = right;
  phi.dist_left = distance_matrix(left);
  phi.dist_right = distance_matrix(right);
  size_t nl = left.size(), nr = right.size();
  phi.values.assign(nl, std::vector<double>(nr, 0.0));

  if (constant_path(je.iota.u) && constant_path(je.eta.u)) {
    std::vector<Element> xi, yj;
    xi.reserve(nl);
    yj.reserve(nr);
    for (const Element& f : left) xi.push_back(image_element(je.iota, f));
    for (const Element& g : right) yj.push_back(image_element(je.eta, g));
    for (size_t i = 0; i < nl; ++i)
      for (size_t j = 0; j < nr; ++j) phi.values[i][j] = distance(xi[i], yj[j]);
    phi.note = "exact (constant unitary paths)";
    return phi;
  }

  double h = 1.0 / (grid_n - 1);
  double lip_l = 0.0, lip_r = 0.0;
  for (const Element& f : left) lip_l = std::max(lip_l, image_lipschitz(je.iota, f));
  for (const Element& g : right) lip_r = std::max(lip_r, image_lipschitz(je.eta, g));
  phi.correction = 0.5 * h * (lip_l + lip_r);

  std::vector<std::vector<Mat>> im_l(nl), im_r(nr);
  for (size_t i = 0; i < nl; ++i) {
    im_l[i].reserve(grid_n);
    for (int g = 0; g < grid_n; ++g)
      im_l[i].push_back(evaluate(je.iota, left[i], g * h));
  }
  for (size_t j = 0; j < nr; ++j) {
    im_r[j].reserve(grid_n);
    for (int g = 0; g < grid_n; ++g)
      im_r[j].push_back(evaluate(je.eta, right[j], g * h));
  }
  for (size_t i = 0; i < nl; ++i)
    for (size_t j = 0; j < nr; ++j) {
      double sup = 0.0;
      for (int g = 0; g < grid_n; ++g)
        sup = std::max(sup, opnorm(im_l[i][g] - im_r[j][g]));
      phi.values[i][j] = sup + phi.correction;
    }
  phi.note = "grid upper bound";
  return phi;
}

SampledBiKatetov extend_trivial(const SampledBiKatetov& phi,
                                const std::vector<Element>& new_left,
                                const std::vector<Element>& new_right) {
  SampledBiKatetov out = core_extension(phi, new_left, new_right);
  out.note = "trivial extension";
  return out;
}

SampledBiKatetov extend_with_margin(const SampledBiKatetov& phi,
                                    const std::vector<Element>& new_left,
                                    const std::vector<Element>& new_right,
                                    double margin) {
  require(margin > 0.0, "NonPositive", "margin must be positive");
  SampledBiKatetov out = core_extension(phi, new_left, new_right);
  for (auto& row : out.values)
    for (double& x : row) x += margin;
  if (margin >= kStrictnessMinGap) {
    StrictnessWitness w;
    w.psi = phi;
    w.left_support.resize(phi.left.size());
    w.right_support.resize(phi.right.size());
    std::iota(w.left_support.begin(), w.left_support.end(), 0);
    std::iota(w.right_support.begin(), w.right_support.end(), 0);
    w.eps = margin;
    out.witness = std::make_shared<StrictnessWitness>(std::move(w));
    out.note = "trivial extension + margin";
  } else {
    out.note = "margin " + std::to_string(margin) +
               " below the strictness minimum " +
               std::to_string(kStrictnessMinGap) + "; no witness attached";
  }
  return out;
}

SampledBiKatetov compose_apx(const SampledBiKatetov& phi,
                             const SampledBiKatetov& psi) {
  require(phi.right.size() == psi.left.size(), "MiddleMismatch",
          "middle sample sets have different sizes");
  for (size_t j = 0; j < phi.right.size(); ++j) {
    require(phi.right[j].algebra == psi.left[j].algebra, "MiddleMismatch",
            "middle samples live in different algebras");
    require(distance(phi.right[j], psi.left[j]) <= kTolBoundary,
            "MiddleMismatch", "middle samples differ");
  }
  SampledBiKatetov out;
  out.left = phi.left;
  out.right = psi.right;
  out.dist_left = phi.dist_left;
  out.dist_right = psi.dist_right;
  size_t nl = out.left.size(), nm = phi.right.size(), nr = out.right.size();
  out.values.assign(nl, std::vector<double>(nr, kInfValue));
  for (size_t i = 0; i < nl; ++i)
    for (size_t k = 0; k < nr; ++k) {
      double best = kInfValue;
      for (size_t j = 0; j < nm; ++j)
        best = std::min(best, phi.values[i][j] + psi.values[j][k]);
      out.values[i][k] = best;
    }
  out.correction = phi.correction + psi.correction;
  out.note = "sampled middle composition (upper bound)";
  return out;
}

double totality_defect(const SampledBiKatetov& phi, const std::vector<int>& a0) {
  require(!a0.empty(), "EmptySubset", "the subset A0 must be nonempty");
  double worst = 0.0;
  for (int idx : a0) {
    require(idx >= 0 && idx < static_cast<int>(phi.left.size()), "ParseError",
            "subset index out of range");
    double best = kInfValue;
    for (size_t j = 0; j < phi.right.size(); ++j)
      best = std::min(best, phi.values[idx][j]);
    worst = std::max(worst, best);
  }
  return worst;
}

std::optional<StrictnessWitness> strictness_witness(const SampledBiKatetov& phi) {
  if (phi.witness) return *phi.witness;
  return std::nullopt;
}

namespace {

bool measures_close(const Measure& a, const Measure& b, double tol) {
  std::vector<double> probes;
  for (const Atom& at : a.atoms()) probes.push_back(at.x);
  for (const Atom& at : b.atoms()) probes.push_back(at.x);
  for (const Knot& k : a.cdf().knots()) probes.push_back(k.x);
  for (const Knot& k : b.cdf().knots()) probes.push_back(k.x);
  for (int g = 0; g <= 32; ++g) probes.push_back(g / 32.0);
  for (double x : probes)
    if (std::abs(a.total_cdf(x) - b.total_cdf(x)) > tol) return false;
  return true;
}

// Recovers a unitary path w with w b_i w* ~ a_i by solving, at each interior
// grid point, for the smallest eigenvector of sum_i M_i* M_i where
// M_i vec(w) = vec(a_i w - w b_i), then chaining global phases so the knots
// interpolate a continuous path.  Endpoints reuse the nearest interior
// solution (the boundary intertwiner space is degenerate).
std::optional<UnitaryPath> align_tuples(const DimensionDropAlgebra& alg,
                                        const std::vector<Element>& gens_a,
                                        const std::vector<Element>& gens_b,
                                        int grid_n) {
  if (alg.matrix_size() > 16) return std::nullopt;  // n^2 x n^2 solves stay trivial
  i64 n = static_cast<i64>(alg.matrix_size());
  int g = std::max(grid_n, 7);
  int interior = g - 2;
  std::vector<double> ss(interior);
  std::vector<Mat> ws;
  ws.reserve(interior);
  int nn = static_cast<int>(n);
  for (int t = 0; t < interior; ++t) {
    double s = (t + 1) / static_cast<double>(g - 1);
    ss[t] = s;
    Mat big = Mat::Zero(nn * nn, nn * nn);
    for (size_t i = 0; i < gens_a.size(); ++i) {
      Mat av = eval(gens_a[i], s);
      Mat bv = eval(gens_b[i], s);
      Mat m = Mat::Zero(nn * nn, nn * nn);
      // column-major vec: vec(a w) = (I (x) a) vec(w), vec(w b) = (b^T (x) I) vec(w)
      for (int c = 0; c < nn; ++c)
        for (int r = 0; r < nn; ++r)
          for (int r2 = 0; r2 < nn; ++r2) m(c * nn + r, c * nn + r2) += av(r, r2);
      for (int c = 0; c < nn; ++c)
        for (int c2 = 0; c2 < nn; ++c2)
          for (int r = 0; r < nn; ++r) m(c * nn + r, c2 * nn + r) -= bv(c2, c);
      big += m.adjoint() * m;
    }
    Eigen::SelfAdjointEigenSolver<Mat> es(big);
    Eigen::VectorXcd vec = es.eigenvectors().col(0);
    Mat w = Eigen::Map<Mat>(vec.data(), nn, nn);
    Eigen::BDCSVD<Mat> svd(w, Eigen::ComputeThinU | Eigen::ComputeThinV);
    w = svd.matrixU() * svd.matrixV().adjoint();
    if (!ws.empty()) {
      std::complex<double> tr = (ws.back().adjoint() * w).trace();
      if (std::abs(tr) > 1e-14) w *= std::conj(tr) / std::abs(tr);
    }
    ws.push_back(std::move(w));
  }
  std::vector<double> knot_s;
  std::vector<Mat> knot_u;
  knot_s.push_back(0.0);
  knot_u.push_back(ws.front());
  for (int t = 0; t < interior; ++t) {
    knot_s.push_back(ss[t]);
    knot_u.push_back(ws[t]);
  }
  knot_s.push_back(1.0);
  knot_u.push_back(ws.back());
  return UnitaryPath::knots(std::move(knot_s), std::move(knot_u));
}

struct Candidate {
  double bound;
  JointEmbedding je;
  std::string label;
};

// max_i of (grid sup + per-run correction) for d(iota(a_i), eta(b_i)).
// When both unitary paths are structurally constant the image difference is
// piecewise linear, so the sup is taken exactly at the merged knots instead.
double pair_bound(const Homomorphism& iota, const Homomorphism& eta,
                  const std::vector<Element>& gens_a,
                  const std::vector<Element>& gens_b, int grid_n) {
  if (constant_path(iota.u) && constant_path(eta.u)) {
    double worst = 0.0;
    for (size_t i = 0; i < gens_a.size(); ++i)
      worst = std::max(worst, distance(image_element(iota, gens_a[i]),
                                       image_element(eta, gens_b[i])));
    return worst;
  }
  double h = 1.0 / (grid_n - 1);
  double worst = 0.0;
  for (size_t i = 0; i < gens_a.size(); ++i) {
    double sup = 0.0;
    for (int g = 0; g < grid_n; ++g) {
      double s = g * h;
      sup = std::max(sup, opnorm(evaluate(iota, gens_a[i], s) -
                                 evaluate(eta, gens_b[i], s)));
    }
    double corr = 0.5 * h * (image_lipschitz(iota, gens_a[i]) +
                             image_lipschitz(eta, gens_b[i]));
    worst = std::max(worst, sup + corr);
  }
  return worst;
}

}  // namespace

DkUpperResult dk_upper(const GeneratorTuple& gen_a, const GeneratorTuple& gen_b,
                       const SearchBudget& budget) {
  require(gen_a.gens.size() == gen_b.gens.size(), "DimensionMismatch",
          "generator tuples have different lengths");
  for (const Element& f : gen_a.gens)
    require(f.algebra == gen_a.algebra, "DimensionMismatch",
            "left tuple entry lives outside its algebra");
  for (const Element& g : gen_b.gens)
    require(g.algebra == gen_b.algebra, "DimensionMismatch",
            "right tuple entry lives outside its algebra");

  std::vector<Candidate> cands;
  bool same = gen_a.algebra == gen_b.algebra;
  bool same_trace = same && measures_close(gen_a.trace, gen_b.trace, kTolExact);

  if (same_trace) {
    double bound = 0.0;
    for (size_t i = 0; i < gen_a.gens.size(); ++i)
      bound = std::max(bound, distance(gen_a.gens[i], gen_b.gens[i]));
    cands.push_back({bound,
                     make_joint_embedding(identity_hom(gen_a.algebra),
                                          identity_hom(gen_b.algebra),
                                          gen_a.trace),
                     "identity"});
    if (budget.align && !gen_a.gens.empty()) {
      auto w = align_tuples(gen_a.algebra, gen_a.gens, gen_b.gens, budget.grid_n);
      if (w) {
        Homomorphism eta = identity_hom(gen_b.algebra);
        eta.u = *w;
        Homomorphism iota = identity_hom(gen_a.algebra);
        double bnd = pair_bound(iota, eta, gen_a.gens, gen_b.gens, budget.grid_n);
        cands.push_back({bnd,
                         make_joint_embedding(std::move(iota), std::move(eta),
                                              gen_a.trace),
                         "recovered conjugation"});
        // a constant snap of the recovered path evaluates exactly; it wins
        // whenever the per-point solutions only moved by numerical noise
        Homomorphism eta_c = identity_hom(gen_b.algebra);
        eta_c.u = UnitaryPath::constant(w->at(0.5));
        Homomorphism iota_c = identity_hom(gen_a.algebra);
        double bnd_c =
            pair_bound(iota_c, eta_c, gen_a.gens, gen_b.gens, budget.grid_n);
        cands.push_back({bnd_c,
                         make_joint_embedding(std::move(iota_c),
                                              std::move(eta_c), gen_a.trace),
                         "recovered conjugation"});
      }
    }
  }

  i64 na = static_cast<i64>(gen_a.algebra.matrix_size());
  i64 nb = static_cast<i64>(gen_b.algebra.matrix_size());
  i64 step = std::lcm(na, nb);
  int attempts = 0;
  for (i64 cd = step; cd <= budget.max_dim && attempts < budget.max_candidates;
       cd += step) {
    for (i64 p2 = 1; p2 <= cd && attempts < budget.max_candidates; ++p2) {
      if (cd % p2 != 0) continue;
      i64 q2 = cd / p2;
      if (std::gcd(p2, q2) != 1) continue;
      ++attempts;
      try {
        DimensionDropAlgebra tgt(p2, q2);
        Homomorphism iota = synthesize_embedding(gen_a.algebra, tgt, budget.eps,
                                                 gen_a.trace, Measure::lebesgue());
        Homomorphism eta = synthesize_embedding(gen_b.algebra, tgt, budget.eps,
                                                gen_b.trace, Measure::lebesgue());
        double bnd =
            pair_bound(iota, eta, gen_a.gens, gen_b.gens, budget.grid_n);
        cands.push_back({bnd,
                         make_joint_embedding(std::move(iota), std::move(eta),
                                              Measure::lebesgue()),
                         "target (" + std::to_string(p2) + "," +
                             std::to_string(q2) + ")"});
      } catch (const Error&) {
        continue;
      }
    }
  }

  std::stable_sort(cands.begin(), cands.end(),
                   [](const Candidate& x, const Candidate& y) {
                     return x.bound < y.bound;
                   });
  for (Candidate& c : cands) {
    try {
      MorphismReport ra = verify_morphism(c.je.iota, gen_a.gens, 21);
      MorphismReport rb = verify_morphism(c.je.eta, gen_b.gens, 21);
      if (std::max(ra.max_defect(), rb.max_defect()) > 1e-8) continue;
    } catch (const Error&) {
      continue;
    }
    return DkUpperResult{c.bound, std::move(c.je), false, c.label};
  }
  DkUpperResult out;
  out.note = "BudgetExhausted: no admissible common target within the budget";
  return out;
}

}  // namespace ddrop
