#include "ddrop/system.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>

#include "ddrop/config.hpp"
#include "ddrop/element.hpp"
#include "ddrop/error.hpp"

namespace ddrop {

namespace {

// Dense/blockwise verification while the source algebra still fits in
// matrices; beyond that no generator can be materialized, so the boundary
// grouping census is the certificate (conservation holds by construction).
void verify_step(const Homomorphism& step) {
  if (step.source.matrix_size() <= kBuildCap) {
    MorphismReport rep =
        verify_morphism(step, standard_generators(step.source), 21);
    if (rep.structural_only) {
      require(rep.boundary_certified, "BoundaryViolation",
              "step failed the boundary census certification");
      return;
    }
    require(rep.max_defect() <= kTolBoundary, "ChainMismatch",
            "step exceeds the morphism defect budget");
    return;
  }
  boundary_grouping_path(step.source, step.target, step.a, step.b,
                         step.pattern);
}

void require_window(const InductiveSystem& sys, int m, int horizon) {
  require(0 <= m && m < horizon && horizon < sys.stages(), "ParseError",
          "need stage indices m < horizon inside the system");
}

// All x where some map of the family attains the value y, solved exactly on
// the linear segments.  A segment constant at y contributes its endpoints
// plus every pattern breakpoint it spans (the family is linear between those,
// so the worst gap over the run is attained at one of them up to the kinkless
// crossings of other maps).
std::vector<double> candidates_at(const EigenvaluePattern& pat, double y) {
  std::vector<double> xs;
  std::optional<std::vector<double>> merged;
  for (const PLMap& t : pat.maps) {
    const auto& kn = t.knots();
    for (size_t j = 0; j + 1 < kn.size(); ++j) {
      double xl = kn[j].x, xr = kn[j + 1].x;
      double vl = kn[j].y, vr = kn[j + 1].y;
      if (vl == y && vr == y) {
        if (!merged) merged = merged_breakpoints(pat.maps);
        xs.push_back(xl);
        xs.push_back(xr);
        for (double bx : *merged)
          if (bx > xl && bx < xr) xs.push_back(bx);
      } else if ((vl - y) * (vr - y) <= 0.0) {
        if (vl == y)
          xs.push_back(xl);
        else if (vr == y)
          xs.push_back(xr);
        else
          xs.push_back(xl + (y - vl) * (xr - xl) / (vr - vl));
      }
    }
  }
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  return xs;
}

}  // namespace

InductiveSystem make_system(std::vector<SystemStage> stage_list,
                            std::vector<Homomorphism> steps) {
  require(!stage_list.empty(), "EmptySet", "a system needs at least one stage");
  require(steps.size() + 1 == stage_list.size(), "ChainMismatch",
          "need exactly one step between consecutive stages");
  for (size_t n = 0; n < steps.size(); ++n) {
    require(steps[n].source == stage_list[n].algebra, "ChainMismatch",
            "step source disagrees with its stage");
    require(steps[n].target == stage_list[n + 1].algebra, "ChainMismatch",
            "step target disagrees with the next stage");
  }
  for (const Homomorphism& st : steps) verify_step(st);
  InductiveSystem sys;
  sys.stage_list = std::move(stage_list);
  sys.steps = std::move(steps);
  return sys;
}

const ComposedPattern& composite_pattern(const InductiveSystem& sys, int m,
                                         int n) {
  require_window(sys, m, n);
  auto key = std::make_pair(m, n);
  auto it = sys.cache.find(key);
  if (it != sys.cache.end()) return it->second;
  ComposedPattern out;
  if (n == m + 1) {
    out.pattern = sys.steps[m].pattern;
    out.a = sys.steps[m].a;
    out.b = sys.steps[m].b;
  } else {
    const ComposedPattern& left = composite_pattern(sys, m, n - 1);
    const Homomorphism& st = sys.steps[n - 1];
    out = compose(sys.stage_list[m].algebra, sys.stage_list[n - 1].algebra,
                  sys.stage_list[n].algebra, left.pattern, left.a, left.b,
                  st.pattern, st.a, st.b);
  }
  return sys.cache.emplace(key, std::move(out)).first->second;
}

namespace {

// Subinterval of [0,1] with endpoint inclusion flags.
struct LevelInterval {
  double l, r;
  bool closed_l, closed_r;
};

// Piece of {x : g(x) <= c} (or strict <) on one linear segment; at most one
// subinterval since g is linear there.
void segment_sublevel(double x0, double y0, double x1, double y1, double c,
                      bool strict, std::vector<LevelInterval>& out) {
  auto below = [&](double v) { return strict ? v < c : v <= c; };
  if (y0 == y1) {
    if (below(y0)) out.push_back({x0, x1, true, true});
    return;
  }
  double t = (c - y0) / (y1 - y0);
  if (y1 > y0) {
    if (below(y1)) {
      out.push_back({x0, x1, true, true});
    } else if (strict ? t > 0 : t >= 0) {
      out.push_back({x0, x0 + t * (x1 - x0), true, !strict});
    }
  } else {
    if (below(y0)) {
      out.push_back({x0, x1, true, true});
    } else if (strict ? t < 1 : t <= 1) {
      out.push_back({x0 + t * (x1 - x0), x1, !strict, true});
    }
  }
}

// Sublevel set of one map as a merged interval list; merging keeps a value
// attained at a shared knot from being counted once per adjacent segment.
std::vector<LevelInterval> map_sublevel(const PLMap& f, double c, bool strict) {
  const auto& ks = f.knots();
  std::vector<LevelInterval> raw;
  for (size_t i = 0; i + 1 < ks.size(); ++i)
    segment_sublevel(ks[i].x, ks[i].y, ks[i + 1].x, ks[i + 1].y, c, strict, raw);
  std::vector<LevelInterval> merged;
  for (const LevelInterval& iv : raw) {
    if (!merged.empty()) {
      LevelInterval& prev = merged.back();
      if (iv.l < prev.r || (iv.l == prev.r && (prev.closed_r || iv.closed_l))) {
        if (iv.r > prev.r || (iv.r == prev.r && iv.closed_r)) {
          prev.r = iv.r;
          prev.closed_r = iv.closed_r;
        }
        continue;
      }
    }
    merged.push_back(iv);
  }
  return merged;
}

// Weighted indicator-sum event on the line extended by endpoint sides:
// tier 0 acts at the point x itself, tier 1 immediately after it.
struct SweepEvent {
  double x;
  int tier;
  i128 delta;
};

// Extremum over x in [0,1] of sum_i mult_i * [x in interval_i].  Counts are
// piecewise constant between event keys; keys closer than 1e-12 collapse so a
// crossing shared by several maps cannot open a spurious one-ulp region.
i128 sweep_extremum(std::vector<SweepEvent> ev, bool want_max) {
  ev.push_back({0.0, 0, 0});
  ev.push_back({1.0, 1, 0});
  std::sort(ev.begin(), ev.end(), [](const SweepEvent& a, const SweepEvent& b) {
    if (a.x != b.x) return a.x < b.x;
    return a.tier < b.tier;
  });
  i128 cur = 0;
  bool first = true;
  i128 best = 0;
  for (size_t i = 0; i < ev.size();) {
    size_t j = i;
    while (j < ev.size() && ev[j].x - ev[i].x <= 1e-12 &&
           ev[j].tier == ev[i].tier) {
      cur += ev[j].delta;
      ++j;
    }
    bool past_end = ev[i].x >= 1.0 && ev[i].tier == 1;
    if (!past_end) {
      if (first || (want_max ? cur > best : cur < best)) best = cur;
      first = false;
    }
    i = j;
  }
  return best;
}

}  // namespace

Census census_any_order(const EigenvaluePattern& pat, double y, double eps) {
  require(eps > 0, "NonPositive", "census eps must be positive");
  require(!pat.maps.empty(), "EmptyPattern", "census of an empty pattern");
  Census c;
  c.y = y;
  c.eps = eps;
  std::vector<SweepEvent> ev_a, ev_b;
  for (size_t i = 0; i < pat.maps.size(); ++i) {
    for (const LevelInterval& iv : map_sublevel(pat.maps[i], y + eps, false)) {
      ev_a.push_back({iv.l, iv.closed_l ? 0 : 1, pat.mults[i]});
      ev_a.push_back({iv.r, iv.closed_r ? 1 : 0, -pat.mults[i]});
    }
    for (const LevelInterval& iv : map_sublevel(pat.maps[i], y - eps, true)) {
      ev_b.push_back({iv.l, iv.closed_l ? 0 : 1, pat.mults[i]});
      ev_b.push_back({iv.r, iv.closed_r ? 1 : 0, -pat.mults[i]});
    }
  }
  c.a_count = sweep_extremum(std::move(ev_a), false);
  c.b_count = sweep_extremum(std::move(ev_b), true);
  c.c_count = c.b_count > c.a_count ? c.b_count - c.a_count : 0;
  return c;
}

VariationReport check_variation(const InductiveSystem& sys, int m, int horizon,
                                double tol) {
  require_window(sys, m, horizon);
  require(tol > 0.0, "NonPositive", "tolerance must be positive");
  VariationReport rep;
  rep.m = m;
  rep.horizon = horizon;
  rep.tol = tol;
  for (int n = m + 1; n <= horizon; ++n) {
    rep.stage.push_back(n);
    rep.v.push_back(variation(composite_pattern(sys, m, n).pattern));
  }
  for (size_t i = 0; i + 1 < rep.v.size(); ++i)
    if (rep.v[i + 1] > rep.v[i] + kTolExact) rep.nonincreasing = false;
  rep.final_value = rep.v.back();
  rep.pass = rep.final_value < tol;
  rep.note = std::string("finite-horizon proxy: the horizon value ") +
             (rep.pass ? "meets" : "misses") +
             " the tolerance; no claim about the limit";
  return rep;
}

SimplicityReport check_simplicity(const InductiveSystem& sys, int m, double eps,
                                  int y_grid, int horizon) {
  require_window(sys, m, horizon);
  require(eps > 0.0, "NonPositive", "eps must be positive");
  require(y_grid >= 2, "ParseError", "y grid needs at least two points");
  SimplicityReport rep;
  rep.m = m;
  rep.horizon = horizon;
  rep.eps = eps;
  rep.y_grid = y_grid;
  rep.rows.resize(y_grid);
  if (eps >= 1.0) {
    for (int j = 0; j < y_grid; ++j)
      rep.rows[j] = {j / static_cast<double>(y_grid - 1), m + 1, 1.0, 0};
    rep.pass = true;
    rep.note = "vacuous: a nonempty value family is always 1-dense in [0,1]";
    return rep;
  }

  std::vector<const ComposedPattern*> comps;
  for (int n = m + 1; n <= horizon; ++n)
    comps.push_back(&composite_pattern(sys, m, n));

  parallel_for(y_grid, [&](i64 j) {
    double y = static_cast<double>(j) / (y_grid - 1);
    SimplicityRow row;
    row.y = y;
    for (int n = m + 1; n <= horizon; ++n) {
      const EigenvaluePattern& pat = comps[n - m - 1]->pattern;
      std::vector<double> xs = candidates_at(pat, y);
      double worst = 0.0;
      std::vector<double> vals(pat.maps.size());
      for (double x : xs) {
        for (size_t i = 0; i < pat.maps.size(); ++i) vals[i] = pat.maps[i](x);
        worst = std::max(worst, hausdorff_gap(vals));
      }
      row.gap = worst;
      row.candidates = static_cast<int>(xs.size());
      if (worst < eps) {
        row.n = n;
        break;
      }
    }
    rep.rows[j] = row;
  });

  rep.pass = std::all_of(rep.rows.begin(), rep.rows.end(),
                         [](const SimplicityRow& r) { return r.n != -1; });
  rep.note = rep.pass ? "every y-row reached the gap bound within the horizon"
                      : "some y-rows never reached the gap bound; horizon "
                        "verdict only";
  return rep;
}

MonotracialReport check_monotracial(const InductiveSystem& sys, int m,
                                    double eps, int y_grid, int horizon,
                                    double ratio_tol) {
  require_window(sys, m, horizon);
  require(eps > 0.0, "NonPositive", "eps must be positive");
  require(ratio_tol > 0.0, "NonPositive", "ratio tolerance must be positive");
  require(y_grid >= 2, "ParseError", "y grid needs at least two points");
  MonotracialReport rep;
  rep.m = m;
  rep.horizon = horizon;
  rep.eps = eps;
  rep.y_grid = y_grid;
  rep.ratio_tol = ratio_tol;
  for (int j = 0; j < y_grid; ++j)
    rep.ys.push_back(static_cast<double>(j) / (y_grid - 1));
  for (int n = m + 1; n <= horizon; ++n) {
    const ComposedPattern& cp = composite_pattern(sys, m, n);
    double k = static_cast<double>(cp.pattern.size());
    std::vector<double> row(y_grid, 0.0);
    for (int j = 0; j < y_grid; ++j) {
      Census c = census_any_order(cp.pattern, rep.ys[j], eps);
      row[j] = static_cast<double>(c.c_count) / k;
    }
    rep.stage.push_back(n);
    rep.ratio.push_back(std::move(row));
  }
  rep.max_final =
      *std::max_element(rep.ratio.back().begin(), rep.ratio.back().end());
  rep.pass = rep.max_final < ratio_tol;
  rep.note = std::string("finite-horizon proxy: worst horizon ratio ") +
             (rep.pass ? "meets" : "misses") + " the tolerance";
  return rep;
}

InductiveSystem standard_system(const DimensionDropAlgebra& start, int stages,
                                const std::vector<double>& eps_schedule) {
  require(stages >= 1, "NonPositive", "need at least one stage");
  require(static_cast<int>(eps_schedule.size()) == stages - 1,
          "DimensionMismatch", "schedule length must be stages - 1");
  for (double e : eps_schedule)
    require(e > 0.0, "NonPositive", "variation schedule must be positive");

  constexpr i128 kI64Max = std::numeric_limits<i64>::max();
  std::vector<SystemStage> stage_list{{start, Measure::lebesgue()}};
  std::vector<Homomorphism> steps;
  DimensionDropAlgebra cur = start;
  for (int n = 0; n + 1 < stages; ++n) {
    double eps = eps_schedule[n];
    // The quantile coupling that makes a step trace-preserving stretches map
    // images, so a staircase built exactly at the scheduled tolerance can
    // overshoot it.  Escalate: tighten the construction tolerance (growing
    // the target with it) until the coupled variation meets the schedule.
    bool placed = false;
    double eps_build = eps;
    for (int tries = 0; tries < 8 && !placed; ++tries, eps_build /= 2) {
      // same bound as minimum_target_bound, in 128-bit for the deep stages
      i128 pq = cur.matrix_size();
      i128 m_bound =
          2 * pq + static_cast<i128>(ceill(static_cast<long double>(pq) /
                                           static_cast<long double>(eps_build)));
      i128 q_next = pq * (m_bound / pq + 1);
      require(q_next + 1 <= kI64Max / 2, "Overflow",
              "next stage leaves 64-bit coordinates");
      i64 qn = static_cast<i64>(q_next);
      i64 pn = static_cast<i64>(m_bound) + 1;
      while (std::gcd(pn, qn) != 1) ++pn;

      DimensionDropAlgebra nxt(pn, qn);
      Homomorphism step = synthesize_embedding(cur, nxt, eps_build,
                                               Measure::lebesgue(),
                                               Measure::lebesgue());
      if (variation(step.pattern) >= eps) continue;
      steps.push_back(std::move(step));
      stage_list.push_back({nxt, Measure::lebesgue()});
      cur = nxt;
      placed = true;
    }
    require(placed, "BoundNotMet",
            "scheduled variation unreachable within the escalation budget");
  }
  return make_system(std::move(stage_list), std::move(steps));
}

InductiveSystem identity_system(const DimensionDropAlgebra& alg, int stages,
                                const Measure& trace) {
  require(stages >= 1, "NonPositive", "need at least one stage");
  std::vector<SystemStage> stage_list(stages, SystemStage{alg, trace});
  std::vector<Homomorphism> steps;
  for (int i = 0; i + 1 < stages; ++i) steps.push_back(identity_hom(alg));
  return make_system(std::move(stage_list), std::move(steps));
}

}  // namespace ddrop
