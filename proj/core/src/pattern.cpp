#include "ddrop/pattern.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <tuple>

namespace ddrop {

EigenvaluePattern make_pattern(std::vector<PLMap> maps, bool normalized) {
  std::vector<i128> mults(maps.size(), i128(1));
  return make_pattern(std::move(maps), std::move(mults), normalized);
}

EigenvaluePattern make_pattern(std::vector<PLMap> maps, std::vector<i128> mults,
                               bool normalized) {
  require(maps.size() == mults.size(), "ParseError",
          "pattern maps and multiplicities disagree in length");
  for (const auto& m : mults) {
    require(m >= 1, "ParseError", "pattern multiplicities must be positive");
  }
  EigenvaluePattern p;
  p.maps = std::move(maps);
  p.mults = std::move(mults);
  p.normalized = normalized;
  return p;
}

std::vector<std::pair<double, i128>> value_multiplicities(
    const EigenvaluePattern& pat, double x, double tol) {
  std::vector<std::pair<double, i128>> vals;
  vals.reserve(pat.maps.size());
  for (std::size_t i = 0; i < pat.maps.size(); ++i) {
    vals.push_back({pat.maps[i](x), pat.mults[i]});
  }
  std::sort(vals.begin(), vals.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<std::pair<double, i128>> merged;
  for (const auto& [v, m] : vals) {
    if (!merged.empty() && v - merged.back().first <= tol) {
      merged.back().second += m;
    } else {
      merged.push_back({v, m});
    }
  }
  return merged;
}

bool is_pointwise_sorted(const EigenvaluePattern& pat, double tol) {
  if (pat.maps.size() < 2) return true;
  // Linear between shared breakpoints, so endpoint checks are exhaustive.
  for (double x : merged_breakpoints(pat.maps)) {
    double prev = -2.0;
    for (const auto& m : pat.maps) {
      double v = m(x);
      if (v < prev - tol) return false;
      prev = v;
    }
  }
  return true;
}

double variation(const EigenvaluePattern& pat) {
  require(!pat.maps.empty(), "EmptyPattern", "variation of an empty pattern");
  double v = 0.0;
  for (const auto& m : pat.maps) v = std::max(v, m.diameter());
  return v;
}

Census census(const EigenvaluePattern& pat, double y, double eps) {
  require(eps > 0, "NonPositive", "census eps must be positive");
  require(is_pointwise_sorted(pat), "NotNormalized",
          "census requires a pointwise-sorted pattern");
  Census c;
  c.y = y;
  c.eps = eps;
  for (std::size_t i = 0; i < pat.maps.size(); ++i) {
    if (pat.maps[i].max_value() <= y + eps) c.a_count += pat.mults[i];
    if (pat.maps[i].min_value() < y - eps) c.b_count += pat.mults[i];
  }
  c.c_count = c.b_count > c.a_count ? c.b_count - c.a_count : 0;
  return c;
}

double hausdorff_gap(std::vector<double> values) {
  require(!values.empty(), "EmptySet", "hausdorff gap of an empty set");
  std::sort(values.begin(), values.end());
  double worst = std::max(values.front(), 1.0 - values.back());
  for (std::size_t i = 0; i + 1 < values.size(); ++i) {
    worst = std::max(worst, (values[i + 1] - values[i]) / 2.0);
  }
  return worst;
}

// ---------------------------------------------------------------------------
// normalize
// ---------------------------------------------------------------------------

namespace {

struct IntervalEntry {
  double l;
  double r;
  std::size_t idx;
};

// Maps are linear between shared breakpoints; ordering them by the value at
// the interval midpoint gives the interior order whenever no crossing lies
// strictly inside.  (Ordering by an endpoint is unstable when two maps meet
// exactly there and diverge.)
std::vector<IntervalEntry> interval_order(const std::vector<PLMap>& maps,
                                          double xl, double xr) {
  std::vector<IntervalEntry> vals(maps.size());
  for (std::size_t i = 0; i < maps.size(); ++i) {
    vals[i] = {maps[i](xl), maps[i](xr), i};
  }
  std::sort(vals.begin(), vals.end(), [](const IntervalEntry& a, const IntervalEntry& b) {
    double ma = a.l + a.r, mb = b.l + b.r;
    if (ma != mb) return ma < mb;
    if (a.l != b.l) return a.l < b.l;
    return a.idx < b.idx;
  });
  return vals;
}

// Breakpoints refined until no adjacent (by midpoint order) pair changes sign
// across any interval; each round inserts the crossing abscissae found.
std::vector<double> crossing_refinement(const std::vector<PLMap>& maps) {
  std::vector<double> xs = merged_breakpoints(maps);
  for (int round = 0; round < 64; ++round) {
    std::vector<double> fresh;
    for (std::size_t t = 0; t + 1 < xs.size(); ++t) {
      double xl = xs[t], xr = xs[t + 1];
      auto vals = interval_order(maps, xl, xr);
      for (std::size_t i = 0; i + 1 < vals.size(); ++i) {
        double d0 = vals[i].l - vals[i + 1].l;
        double d1 = vals[i].r - vals[i + 1].r;
        if ((d0 > 1e-13 && d1 < -1e-13) || (d0 < -1e-13 && d1 > 1e-13)) {
          double u = d0 / (d0 - d1);
          double x = xl + u * (xr - xl);
          if (x > xl + 1e-13 && x < xr - 1e-13) fresh.push_back(x);
        }
      }
    }
    if (fresh.empty()) break;
    xs.insert(xs.end(), fresh.begin(), fresh.end());
    std::sort(xs.begin(), xs.end());
    xs.erase(std::unique(xs.begin(), xs.end(),
                         [](double a, double b) { return b - a <= 1e-13; }),
             xs.end());
  }
  return xs;
}

// Drop interior knots that are exactly collinear with their neighbours.
PLMap simplify(const PLMap& m) {
  const auto& kn = m.knots();
  std::vector<Knot> out;
  out.push_back(kn.front());
  for (std::size_t i = 1; i + 1 < kn.size(); ++i) {
    const Knot& a = out.back();
    const Knot& b = kn[i];
    const Knot& c = kn[i + 1];
    double t = (b.x - a.x) / (c.x - a.x);
    double interp = a.y + t * (c.y - a.y);
    if (interp == b.y) continue;
    out.push_back(b);
  }
  out.push_back(kn.back());
  return PLMap(out);
}

}  // namespace

EigenvaluePattern normalize(const EigenvaluePattern& pat) {
  if (pat.maps.empty()) {
    EigenvaluePattern out;
    out.normalized = true;
    return out;
  }
  const std::size_t n = pat.maps.size();
  std::vector<double> xs = crossing_refinement(pat.maps);
  const std::size_t T = xs.size();

  // Pass 1: cumulative multiplicity boundaries per interval, pooled globally.
  std::vector<i128> cuts;
  cuts.push_back(0);
  {
    i128 total = 0;
    for (auto m : pat.mults) total += m;
    cuts.push_back(total);
  }
  std::vector<std::vector<std::size_t>> order(T - 1);
  for (std::size_t t = 0; t + 1 < T; ++t) {
    auto vals = interval_order(pat.maps, xs[t], xs[t + 1]);
    auto& ord = order[t];
    ord.resize(n);
    i128 acc = 0;
    for (std::size_t s = 0; s < n; ++s) {
      ord[s] = vals[s].idx;
      acc += pat.mults[vals[s].idx];
      if (s + 1 < n) cuts.push_back(acc);
    }
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  // Pass 2: each cumulative range [cuts[b], cuts[b+1]) lies inside a single
  // sorted slot on every interval; trace its value across the breakpoints.
  EigenvaluePattern out;
  out.normalized = true;
  for (std::size_t b = 0; b + 1 < cuts.size(); ++b) {
    i128 lo = cuts[b];
    std::vector<Knot> kn;
    kn.reserve(T);
    for (std::size_t t = 0; t + 1 < T; ++t) {
      // Find the slot containing cumulative position lo in interval t.
      i128 acc = 0;
      std::size_t slot = 0;
      for (std::size_t s = 0; s < n; ++s) {
        i128 next = acc + pat.mults[order[t][s]];
        if (lo < next) {
          slot = s;
          break;
        }
        acc = next;
      }
      const PLMap& m = pat.maps[order[t][slot]];
      kn.push_back({xs[t], m(xs[t])});
      if (t + 2 == T) kn.push_back({xs[t + 1], m(xs[t + 1])});
    }
    out.maps.push_back(simplify(PLMap(kn)));
    out.mults.push_back(cuts[b + 1] - cuts[b]);
  }

  // Merge identical neighbours (splits that turned out unnecessary).
  EigenvaluePattern merged;
  merged.normalized = true;
  for (std::size_t i = 0; i < out.maps.size(); ++i) {
    if (!merged.maps.empty() &&
        merged.maps.back().knots().size() == out.maps[i].knots().size()) {
      bool same = true;
      const auto& a = merged.maps.back().knots();
      const auto& b = out.maps[i].knots();
      for (std::size_t j = 0; j < a.size() && same; ++j) {
        same = a[j].x == b[j].x && a[j].y == b[j].y;
      }
      if (same) {
        merged.mults.back() += out.mults[i];
        continue;
      }
    }
    merged.maps.push_back(out.maps[i]);
    merged.mults.push_back(out.mults[i]);
  }
  return merged;
}

// ---------------------------------------------------------------------------
// compose
// ---------------------------------------------------------------------------

namespace {

i128 exact_div_i128(i128 num, i128 den, const char* what) {
  require(den != 0 && num % den == 0, "ChainMismatch",
          std::string(what) + ": boundary multiplicities are not divisible as a "
                              "unital embedding requires");
  return num / den;
}

void add_map(std::map<std::vector<std::pair<double, double>>, i128>& store,
             const PLMap& m, i128 mult) {
  std::vector<std::pair<double, double>> key;
  key.reserve(m.knots().size());
  for (const auto& k : m.knots()) key.push_back({k.x, k.y});
  store[key] += mult;
}

constexpr double kPin = 1e-12;

}  // namespace

ComposedPattern compose(const DimensionDropAlgebra& m, const DimensionDropAlgebra& n,
                        const DimensionDropAlgebra& l,
                        const EigenvaluePattern& outer, i64 a_o, i64 b_o,
                        const EigenvaluePattern& inner, i64 a_i, i64 b_i) {
  const i64 pm = m.p, qm = m.q, pn = n.p, qn = n.q, pl_ = l.p, ql = l.q;
  require(a_o >= 0 && a_o < qm && b_o >= 0 && b_o < pm && a_i >= 0 && a_i < qn &&
              b_i >= 0 && b_i < pn,
          "ChainMismatch", "remainder indices out of range");
  i128 k1 = outer.size(), k2 = inner.size();
  require(static_cast<i128>(pm) * a_o + static_cast<i128>(pm) * qm * k1 +
                  static_cast<i128>(qm) * b_o ==
              static_cast<i128>(pn) * qn,
          "ChainMismatch", "first pattern does not match its algebra pair");
  require(static_cast<i128>(pn) * a_i + static_cast<i128>(pn) * qn * k2 +
                  static_cast<i128>(qn) * b_i ==
              static_cast<i128>(pl_) * ql,
          "ChainMismatch", "second pattern does not match its algebra pair");
  require(static_cast<double>(outer.maps.size()) * inner.maps.size() <= 5e6,
          "Overflow", "composite pattern would have too many distinct maps");

  std::map<std::vector<std::pair<double, double>>, i128> store;
  for (std::size_t j = 0; j < outer.maps.size(); ++j) {
    for (std::size_t i = 0; i < inner.maps.size(); ++i) {
      add_map(store, compose_pl(outer.maps[j], inner.maps[i]),
              outer.mults[j] * inner.mults[i]);
    }
  }

  i128 a_raw = static_cast<i128>(a_o) * k2;
  i128 b_raw = static_cast<i128>(b_o) * k2;

  // Inner remainders see the outer hom's boundary block structure: a_i copies
  // of the x=0 compression, b_i copies of the x=1 compression.  Each splits
  // into source-corner blocks (feeding the raw remainders) and interior
  // constants.
  if (a_i > 0) {
    i128 n00 = 0, n01 = 0;
    for (const auto& [v, cnt] : value_multiplicities(outer, 0.0, kPin)) {
      if (std::fabs(v) <= kPin) {
        n00 = cnt;
      } else if (std::fabs(v - 1.0) <= kPin) {
        n01 = cnt;
      } else {
        i128 per = exact_div_i128(cnt, qn, "x=0 interior");
        add_map(store, PLMap::constant(v), static_cast<i128>(a_i) * per);
      }
    }
    a_raw += a_i * exact_div_i128(a_o + static_cast<i128>(qm) * n00, qn, "x=0 corner");
    b_raw += a_i * exact_div_i128(b_o + static_cast<i128>(pm) * n01, qn, "x=0 corner");
  }
  if (b_i > 0) {
    i128 n10 = 0, n11 = 0;
    for (const auto& [v, cnt] : value_multiplicities(outer, 1.0, kPin)) {
      if (std::fabs(v) <= kPin) {
        n10 = cnt;
      } else if (std::fabs(v - 1.0) <= kPin) {
        n11 = cnt;
      } else {
        i128 per = exact_div_i128(cnt, pn, "x=1 interior");
        add_map(store, PLMap::constant(v), static_cast<i128>(b_i) * per);
      }
    }
    a_raw += b_i * exact_div_i128(a_o + static_cast<i128>(qm) * n10, pn, "x=1 corner");
    b_raw += b_i * exact_div_i128(b_o + static_cast<i128>(pm) * n11, pn, "x=1 corner");
  }

  ComposedPattern out;
  out.a = static_cast<i64>(a_raw % qm);
  out.b = static_cast<i64>(b_raw % pm);
  i128 spill0 = (a_raw - out.a) / qm;
  i128 spill1 = (b_raw - out.b) / pm;
  if (spill0 > 0) add_map(store, PLMap::constant(0.0), spill0);
  if (spill1 > 0) add_map(store, PLMap::constant(1.0), spill1);

  for (const auto& [key, mult] : store) {
    std::vector<Knot> kn;
    kn.reserve(key.size());
    for (const auto& [x, y] : key) kn.push_back({x, y});
    out.pattern.maps.push_back(PLMap(kn));
    out.pattern.mults.push_back(mult);
  }
  out.pattern.normalized = false;

  require(static_cast<i128>(pm) * out.a + static_cast<i128>(pm) * qm * out.pattern.size() +
                  static_cast<i128>(qm) * out.b ==
              static_cast<i128>(pl_) * ql,
          "ChainMismatch", "composite conservation identity failed");
  return out;
}

// ---------------------------------------------------------------------------
// synthesize
// ---------------------------------------------------------------------------

namespace {

struct Seg {
  i128 count;
  i64 level;
};

struct Run {
  i128 count;
  i64 s;
  i64 e;
};

void push_seg(std::vector<Seg>& segs, i128 count, i64 level) {
  if (count <= 0) return;
  if (!segs.empty() && segs.back().level == level) {
    segs.back().count += count;
  } else {
    segs.push_back({count, level});
  }
}

// Levels along one endpoint's rank axis: pins at 0, interior blocks on the
// rounded ladder (never touching 0 or R), pins at R.  Block level depends only
// on the block's rank-interval midpoint, so it is nondecreasing in j.
std::vector<Seg> side_segments(i64 pin0, i64 blocks, i64 width, i64 pin_top,
                               i128 k, i64 R) {
  std::vector<Seg> segs;
  push_seg(segs, pin0, 0);
  auto level_of = [&](i64 j) -> i64 {
    i128 lo = pin0 + static_cast<i128>(j) * width;
    i128 mid2 = 2 * lo + width;  // twice the block midpoint
    i128 val = (mid2 * R + k) / (2 * k);
    if (val < 1) val = 1;
    if (val > R - 1) val = R - 1;
    return static_cast<i64>(val);
  };
  if (blocks > 0 && blocks <= 4096) {
    for (i64 j = 0; j < blocks; ++j) push_seg(segs, width, level_of(j));
  } else if (blocks > 0) {
    i64 j = 0;
    while (j < blocks) {
      i64 lvl = level_of(j);
      i64 lo = j, hi = blocks;
      while (lo + 1 < hi) {
        i64 mid = lo + (hi - lo) / 2;
        if (level_of(mid) <= lvl) {
          lo = mid;
        } else {
          hi = mid;
        }
      }
      push_seg(segs, static_cast<i128>(hi - j) * width, lvl);
      j = hi;
    }
  }
  push_seg(segs, pin_top, R);
  return segs;
}

std::vector<Run> match_runs(const std::vector<Seg>& S, const std::vector<Seg>& E) {
  std::vector<Run> runs;
  std::size_t i = 0, j = 0;
  i128 ci = 0, cj = 0;
  while (i < S.size() && j < E.size()) {
    i128 take = std::min(S[i].count - ci, E[j].count - cj);
    if (!runs.empty() && runs.back().s == S[i].level && runs.back().e == E[j].level) {
      runs.back().count += take;
    } else {
      runs.push_back({take, S[i].level, E[j].level});
    }
    ci += take;
    cj += take;
    if (ci == S[i].count) {
      ++i;
      ci = 0;
    }
    if (cj == E[j].count) {
      ++j;
      cj = 0;
    }
  }
  return runs;
}

double level_value(i64 lvl, i64 R) { return static_cast<double>(lvl) / R; }

EigenvaluePattern synthesize_full(const EmbeddingIntegers& e, i64 pt, i64 qt, i64 R) {
  auto S = side_segments(e.n00, e.c0, qt, e.n01, e.k, R);
  auto E = side_segments(e.n10, e.c1, pt, e.n11, e.k, R);
  auto runs = match_runs(S, E);
  for (const auto& r : runs) {
    require(r.s - r.e <= 1 && r.e - r.s <= 1, "BulletsUnsatisfied",
            "rank-matched endpoint levels drifted apart (internal)");
  }

  // Each rung [r/R,(r+1)/R] needs a map whose image is exactly that rung.
  // Spanning runs provide them; where the two level sequences jump at the same
  // rank, split a single unit off a flanking constant run as a bridge.
  struct Bridge {
    i64 base;  // endpoint level
    i64 mid;   // level reached at s = 1/2
  };
  std::vector<Bridge> bridges;
  for (i64 rung = 0; rung + 1 <= R; ++rung) {
    bool covered = false;
    for (const auto& r : runs) {
      if (std::min(r.s, r.e) == rung && std::max(r.s, r.e) == rung + 1) {
        covered = true;
        break;
      }
    }
    if (covered) continue;
    auto split_from = [&](i64 lvl) -> bool {
      for (auto& r : runs) {
        if (r.s == lvl && r.e == lvl && r.count > 0) {
          r.count -= 1;
          return true;
        }
      }
      return false;
    };
    if (split_from(rung + 1)) {
      bridges.push_back({rung + 1, rung});
    } else if (split_from(rung)) {
      bridges.push_back({rung, rung + 1});
    } else {
      fail("BulletsUnsatisfied", "no flanking run for an uncovered rung (internal)");
    }
  }

  EigenvaluePattern out;
  for (const auto& r : runs) {
    if (r.count <= 0) continue;
    double vs = level_value(r.s, R), ve = level_value(r.e, R);
    if (r.s != r.e) {
      out.maps.push_back(PLMap::line(vs, ve));
    } else if (r.s == R) {
      // Constant runs become half-rung tents so every map is piecewise
      // strictly monotone; the top level tents downward to stay inside [0,1].
      out.maps.push_back(
          PLMap({{0.0, 1.0}, {0.5, (2.0 * R - 1) / (2.0 * R)}, {1.0, 1.0}}));
    } else {
      double mid = (2.0 * r.s + 1) / (2.0 * R);
      out.maps.push_back(PLMap({{0.0, vs}, {0.5, mid}, {1.0, vs}}));
    }
    out.mults.push_back(r.count);
  }
  for (const auto& br : bridges) {
    double base = level_value(br.base, R);
    double mid = level_value(br.mid, R);
    out.maps.push_back(PLMap({{0.0, base}, {0.5, mid}, {1.0, base}}));
    out.mults.push_back(1);
  }
  out.normalized = bridges.empty();
  return out;
}

EigenvaluePattern synthesize_waived(const EmbeddingIntegers& e, i64 pt, i64 qt) {
  // Coarse three-level layout: pins at 0 and 1, all interior ranks at 1/2.
  std::vector<Seg> S, E;
  push_seg(S, e.n00, 0);
  push_seg(S, static_cast<i128>(e.k) - e.n00 - e.n01, 1);
  push_seg(S, e.n01, 2);
  push_seg(E, e.n10, 0);
  push_seg(E, static_cast<i128>(e.k) - e.n10 - e.n11, 1);
  push_seg(E, e.n11, 2);
  auto runs = match_runs(S, E);

  EigenvaluePattern out;
  for (const auto& r : runs) {
    out.maps.push_back(PLMap::line(r.s / 2.0, r.e / 2.0));
    out.mults.push_back(r.count);
  }

  // The sweep 0<->1 runs usually cover [0,1]; when they do not, one unit gets
  // interior knots sweeping the full interval (its endpoint values and hence
  // all censuses are unchanged).
  std::vector<std::pair<double, double>> intervals;
  for (const auto& m : out.maps) {
    intervals.push_back({m.min_value(), m.max_value()});
  }
  std::sort(intervals.begin(), intervals.end());
  double reach = 0.0;
  bool covered = true;
  for (const auto& [lo, hi] : intervals) {
    if (lo > reach) {
      covered = false;
      break;
    }
    reach = std::max(reach, hi);
  }
  covered = covered && reach == 1.0;
  if (!covered) {
    double vs = out.maps.front()(0.0), ve = out.maps.front()(1.0);
    if (out.mults.front() == 1) {
      out.maps.erase(out.maps.begin());
      out.mults.erase(out.mults.begin());
    } else {
      out.mults.front() -= 1;
    }
    out.maps.insert(out.maps.begin(),
                    PLMap({{0.0, vs}, {1.0 / 3, 0.0}, {2.0 / 3, 1.0}, {1.0, ve}}));
    out.mults.insert(out.mults.begin(), 1);
    out.normalized = out.maps.size() == 1;
  } else {
    out.normalized = true;
  }
  return out;
}

}  // namespace

EigenvaluePattern synthesize(const EmbeddingIntegers& ints,
                             const DimensionDropAlgebra& src,
                             const DimensionDropAlgebra& tgt, double eps) {
  (void)src;
  require(eps > 0, "NonPositive", "eps must be positive");
  require(ints.k >= 1, "BulletsUnsatisfied", "empty pattern cannot cover [0,1]");
  require(ints.c0 >= 0 && ints.c1 >= 0, "BulletsUnsatisfied",
          "boundary pins exceed the pattern length");
  i64 R = static_cast<i64>(std::floor(1.0 / eps)) + 1;
  if (R < 2) R = 2;
  if (std::min(ints.c0, ints.c1) >= R) {
    require(R <= (i64(1) << 20), "Overflow", "rung count too large for synthesis");
    return synthesize_full(ints, tgt.p, tgt.q, R);
  }
  require(eps >= 1.0, "BulletsUnsatisfied",
          "side conditions fail and eps < 1 leaves no coarse fallback");
  return synthesize_waived(ints, tgt.p, tgt.q);
}

}  // namespace ddrop
