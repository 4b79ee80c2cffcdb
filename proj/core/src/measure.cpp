#include "ddrop/measure.hpp"

#include <algorithm>
#include <cmath>

#include "ddrop/ints.hpp"

namespace ddrop {

namespace {

constexpr double kMassTol = 1e-12;

std::vector<Atom> cluster_atoms(std::vector<Atom> raw) {
  std::sort(raw.begin(), raw.end(),
            [](const Atom& a, const Atom& b) { return a.x < b.x; });
  std::vector<Atom> out;
  for (const auto& a : raw) {
    if (a.mass == 0.0) continue;
    if (!out.empty() && a.x - out.back().x <= 1e-12) {
      out.back().mass += a.mass;
    } else {
      out.push_back(a);
    }
  }
  return out;
}

}  // namespace

Measure::Measure(std::vector<Atom> atoms, PLMap cdf)
    : atoms_(std::move(atoms)), cdf_(std::move(cdf)) {
  std::sort(atoms_.begin(), atoms_.end(),
            [](const Atom& a, const Atom& b) { return a.x < b.x; });
  double am = 0.0;
  for (std::size_t i = 0; i < atoms_.size(); ++i) {
    require(atoms_[i].mass > 0.0, "ParseError", "atom mass must be positive");
    require(atoms_[i].x >= 0.0 && atoms_[i].x <= 1.0, "ParseError",
            "atom location outside [0,1]");
    if (i > 0) {
      require(atoms_[i].x > atoms_[i - 1].x, "ParseError",
              "atom locations must be distinct");
    }
    am += atoms_[i].mass;
  }
  require(cdf_.is_nondecreasing(kMassTol), "ParseError",
          "CDF must be nondecreasing");
  require(std::fabs(cdf_.knots().front().y) <= kMassTol, "ParseError",
          "CDF must start at 0");
  require(std::fabs(am + cdf_.knots().back().y - 1.0) <= kMassTol, "ParseError",
          "total mass must be 1");
  faithful_ = true;
  const auto& ks = cdf_.knots();
  for (std::size_t i = 0; i + 1 < ks.size(); ++i) {
    if (!(ks[i + 1].y > ks[i].y)) {
      faithful_ = false;
      break;
    }
  }
}

Measure Measure::lebesgue() { return Measure({}, PLMap::identity()); }

Measure Measure::point(double x) {
  return Measure({{x, 1.0}}, PLMap::constant(0.0));
}

double Measure::atom_mass() const {
  double m = 0.0;
  for (const auto& a : atoms_) m += a.mass;
  return m;
}

double Measure::total_cdf(double x) const {
  double v = cdf_(x);
  for (const auto& a : atoms_) {
    if (a.x <= x) v += a.mass;
  }
  return v;
}

Measure mix(const std::vector<std::pair<double, Measure>>& parts) {
  require(!parts.empty(), "ParseError", "mix needs at least one part");
  std::vector<Atom> raw;
  std::vector<double> xs;
  for (const auto& [w, m] : parts) {
    require(w >= 0.0, "ParseError", "mix weight must be nonnegative");
    for (const auto& a : m.atoms()) raw.push_back({a.x, w * a.mass});
    for (const auto& k : m.cdf().knots()) xs.push_back(k.x);
  }
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  std::vector<Knot> ks;
  ks.reserve(xs.size());
  for (double x : xs) {
    double y = 0.0;
    for (const auto& [w, m] : parts) y += w * m.cdf()(x);
    ks.push_back({x, y});
  }
  return Measure(cluster_atoms(std::move(raw)), PLMap(std::move(ks)));
}

double integrate(const Measure& mu, const PLMap& g) {
  return integrate(mu, g.knots());
}

double integrate(const Measure& mu, const std::vector<Knot>& graph) {
  double s = 0.0;
  // On each common segment both the graph and the CDF are linear, so the
  // Riemann-Stieltjes integral is the trapezoid value exactly.
  std::vector<double> xs;
  for (const Knot& k : mu.cdf().knots()) xs.push_back(k.x);
  for (const Knot& k : graph) xs.push_back(k.x);
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
    double u = xs[i], v = xs[i + 1];
    double dF = mu.cdf()(v) - mu.cdf()(u);
    if (dF != 0.0)
      s += 0.5 * (eval_graph(graph, u) + eval_graph(graph, v)) * dF;
  }
  for (const auto& a : mu.atoms()) s += a.mass * eval_graph(graph, a.x);
  return s;
}

namespace {

struct Chunk {
  double lo, hi, mass;  // linear CDF increment spread over [lo, hi]
};

Measure transport(const Measure& mu, const PLMap& t) {
  std::vector<Atom> raw;
  for (const auto& a : mu.atoms()) raw.push_back({t(a.x), a.mass});

  std::vector<Chunk> chunks;
  auto xs = merged_breakpoints(mu.cdf(), t);
  for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
    double u = xs[i], v = xs[i + 1];
    double dF = mu.cdf()(v) - mu.cdf()(u);
    if (dF <= 0.0) continue;
    double y0 = t(u), y1 = t(v);
    // Plateau: its mass condenses to an atom.  The width test is a tolerance,
    // not equality, because composed maps carry last-bit noise at the edges
    // of genuinely flat stretches.
    if (std::fabs(y1 - y0) <= 1e-13) {
      raw.push_back({0.5 * (y0 + y1), dF});
    } else {
      chunks.push_back({std::min(y0, y1), std::max(y0, y1), dF});
    }
  }

  // Between consecutive chunk ordinates the image density is constant, so the
  // image CDF is PL with knots exactly at the chunk endpoints.
  std::vector<double> ys;
  ys.reserve(2 * chunks.size());
  for (const auto& c : chunks) {
    ys.push_back(c.lo);
    ys.push_back(c.hi);
  }
  std::sort(ys.begin(), ys.end());
  ys.erase(std::unique(ys.begin(), ys.end()), ys.end());

  std::vector<Knot> ks;
  ks.push_back({0.0, 0.0});
  double cum = 0.0;
  if (!ys.empty()) {
    if (ys.front() > 0.0) ks.push_back({ys.front(), 0.0});
    for (std::size_t i = 0; i + 1 < ys.size(); ++i) {
      double w0 = ys[i], w1 = ys[i + 1];
      for (const auto& c : chunks) {
        if (c.lo <= w0 && w1 <= c.hi) {
          cum += c.mass * (w1 - w0) / (c.hi - c.lo);
        }
      }
      ks.push_back({w1, cum});
    }
  }
  if (ks.back().x < 1.0) ks.push_back({1.0, cum});
  return Measure(cluster_atoms(std::move(raw)), PLMap(std::move(ks)));
}

// Left-continuous quantile of a faithful measure, as a PL map of [0,1] onto
// [0,1].  Walks the value axis: continuous stretches become rising segments,
// atoms become plateaus.
PLMap quantile_function(const Measure& tau) {
  std::vector<double> ys;
  for (const auto& k : tau.cdf().knots()) ys.push_back(k.x);
  for (const auto& a : tau.atoms()) ys.push_back(a.x);
  std::sort(ys.begin(), ys.end());
  ys.erase(std::unique(ys.begin(), ys.end()), ys.end());

  auto atom_at = [&](double y) {
    for (const auto& a : tau.atoms()) {
      if (a.x == y) return a.mass;
    }
    return 0.0;
  };

  std::vector<Knot> q;
  q.push_back({0.0, 0.0});
  double u = 0.0;
  auto push = [&](double uu, double yy) {
    // Mass below double resolution folds into the following knot.
    if (uu > q.back().x) q.push_back({uu, yy});
  };
  for (std::size_t i = 0; i + 1 < ys.size(); ++i) {
    double m = atom_at(ys[i]);
    if (m > 0.0) {
      u += m;
      push(u, ys[i]);
    }
    u += tau.cdf()(ys[i + 1]) - tau.cdf()(ys[i]);
    push(u, ys[i + 1]);
  }
  u += atom_at(1.0);
  require(std::fabs(u - 1.0) <= 1e-9, "ParseError",
          "quantile accumulation drifted from total mass");
  while (!q.empty() && q.back().x >= 1.0 - 1e-15) q.pop_back();
  q.push_back({1.0, 1.0});
  return PLMap(std::move(q));
}

}  // namespace

Measure pushforward(const Measure& mu, const PLMap& beta) {
  require(beta.is_nondecreasing(1e-12), "NotMonotone",
          "pushforward needs a nondecreasing map");
  return transport(mu, beta);
}

Measure pushforward_pieces(const Measure& mu, const PLMap& t) {
  return transport(mu, t);
}

PLMap quantile_coupling(const Measure& lambda_src, const Measure& tau) {
  require(lambda_src.atomless(), "SourceNotAtomless",
          "coupling source must be atomless");
  require(lambda_src.faithful(), "SourceNotFaithful",
          "coupling source must be faithful");
  require(tau.faithful(), "TargetNotFaithful",
          "coupling target must be faithful");
  return compose_pl(quantile_function(tau), lambda_src.cdf());
}

std::vector<std::pair<double, double>> plateaus(const PLMap& beta) {
  require(beta.is_nondecreasing(1e-12), "NotMonotone",
          "plateaus need a nondecreasing map");
  const auto& ks = beta.knots();
  std::vector<std::pair<double, double>> out;
  std::size_t i = 0;
  while (i + 1 < ks.size()) {
    if (ks[i + 1].y == ks[i].y) {
      std::size_t j = i + 1;
      while (j + 1 < ks.size() && ks[j + 1].y == ks[j].y) ++j;
      out.push_back({ks[i].x, ks[j].x});
      i = j;
    } else {
      ++i;
    }
  }
  return out;
}

Measure pullback_measure(const EigenvaluePattern& pat, i64 a, i64 b,
                         const DimensionDropAlgebra& src,
                         const DimensionDropAlgebra& tgt, const Measure& tau) {
  require(!pat.maps.empty() && pat.maps.size() == pat.mults.size(),
          "EmptyPattern", "pullback needs a nonempty pattern");
  i128 total = 0;
  for (const auto& m : pat.mults) total += m;
  i128 lhs = static_cast<i128>(src.p) * a +
             static_cast<i128>(src.p) * src.q * total +
             static_cast<i128>(src.q) * b;
  require(lhs == tgt.matrix_size(), "DimensionMismatch",
          "pattern and remainders do not fill the target algebra");

  long double den = static_cast<long double>(i128_to_double(tgt.matrix_size()));
  long double pq = static_cast<long double>(src.p) * src.q;
  std::vector<std::pair<double, Measure>> parts;
  if (a > 0) {
    long double w = static_cast<long double>(src.p) * a / den;
    parts.push_back({static_cast<double>(w), Measure::point(0.0)});
  }
  if (b > 0) {
    long double w = static_cast<long double>(src.q) * b / den;
    parts.push_back({static_cast<double>(w), Measure::point(1.0)});
  }
  for (std::size_t i = 0; i < pat.maps.size(); ++i) {
    long double w = pq * i128_to_double(pat.mults[i]) / den;
    parts.push_back(
        {static_cast<double>(w), pushforward_pieces(tau, pat.maps[i])});
  }
  return mix(parts);
}

}  // namespace ddrop
