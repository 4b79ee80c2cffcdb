#include "ddrop/pl_map.hpp"

#include <algorithm>
#include <cmath>

namespace ddrop {

namespace {
constexpr double kMergeTol = 1e-14;  // duplicate-abscissa collapse
}

PLMap::PLMap(std::vector<Knot> knots) : knots_(std::move(knots)) {
  require(knots_.size() >= 2, "ParseError", "piecewise-linear map needs at least 2 knots");
  require(knots_.front().x == 0.0 && knots_.back().x == 1.0, "ParseError",
          "piecewise-linear map must cover [0,1]");
  for (std::size_t i = 0; i + 1 < knots_.size(); ++i) {
    require(knots_[i].x < knots_[i + 1].x, "ParseError",
            "knot abscissae must be strictly increasing");
  }
  for (auto& k : knots_) {
    require(k.y >= -1e-9 && k.y <= 1.0 + 1e-9, "ParseError",
            "knot value outside [0,1]");
    k.y = std::min(1.0, std::max(0.0, k.y));
  }
}

double PLMap::operator()(double s) const {
  if (s <= 0.0) return knots_.front().y;
  if (s >= 1.0) return knots_.back().y;
  auto it = std::upper_bound(knots_.begin(), knots_.end(), s,
                             [](double v, const Knot& k) { return v < k.x; });
  const Knot& hi = *it;
  const Knot& lo = *(it - 1);
  if (s == lo.x) return lo.y;
  double t = (s - lo.x) / (hi.x - lo.x);
  return lo.y + t * (hi.y - lo.y);
}

double PLMap::min_value() const {
  double m = knots_.front().y;
  for (const auto& k : knots_) m = std::min(m, k.y);
  return m;
}

double PLMap::max_value() const {
  double m = knots_.front().y;
  for (const auto& k : knots_) m = std::max(m, k.y);
  return m;
}

double PLMap::max_slope() const {
  double m = 0.0;
  for (std::size_t i = 0; i + 1 < knots_.size(); ++i) {
    m = std::max(m, std::fabs(knots_[i + 1].y - knots_[i].y) /
                        (knots_[i + 1].x - knots_[i].x));
  }
  return m;
}

bool PLMap::is_nondecreasing(double tol) const {
  for (std::size_t i = 0; i + 1 < knots_.size(); ++i) {
    if (knots_[i + 1].y < knots_[i].y - tol) return false;
  }
  return true;
}

bool PLMap::is_constant(double tol) const {
  return diameter() <= tol;
}

PLMap compose_pl(const PLMap& outer, const PLMap& inner) {
  std::vector<double> xs;
  for (const auto& k : inner.knots()) xs.push_back(k.x);
  // Preimages of outer's interior knots, segment by segment of inner.
  const auto& in = inner.knots();
  for (std::size_t i = 0; i + 1 < in.size(); ++i) {
    double y0 = in[i].y, y1 = in[i + 1].y;
    if (y0 == y1) continue;
    double lo = std::min(y0, y1), hi = std::max(y0, y1);
    for (const auto& ok : outer.knots()) {
      if (ok.x <= lo || ok.x >= hi) continue;
      double t = (ok.x - y0) / (y1 - y0);
      xs.push_back(in[i].x + t * (in[i + 1].x - in[i].x));
    }
  }
  std::sort(xs.begin(), xs.end());
  std::vector<Knot> out;
  for (double x : xs) {
    if (!out.empty() && x - out.back().x <= kMergeTol) continue;
    out.push_back({x, outer(inner(x))});
  }
  out.front().x = 0.0;
  out.back().x = 1.0;
  return PLMap(out);
}

std::vector<double> merged_breakpoints(const PLMap& f, const PLMap& g) {
  std::vector<double> xs;
  for (const auto& k : f.knots()) xs.push_back(k.x);
  for (const auto& k : g.knots()) xs.push_back(k.x);
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end(),
                       [](double a, double b) { return b - a <= kMergeTol; }),
           xs.end());
  return xs;
}

std::vector<double> merged_breakpoints(const std::vector<PLMap>& maps) {
  std::vector<double> xs;
  for (const auto& m : maps) {
    for (const auto& k : m.knots()) xs.push_back(k.x);
  }
  if (xs.empty()) return {0.0, 1.0};
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end(),
                       [](double a, double b) { return b - a <= kMergeTol; }),
           xs.end());
  return xs;
}

double sup_distance(const PLMap& f, const PLMap& g) {
  double m = 0.0;
  for (double x : merged_breakpoints(f, g)) {
    m = std::max(m, std::fabs(f(x) - g(x)));
  }
  return m;
}

std::vector<double> crossing_points(const PLMap& f, const PLMap& g) {
  std::vector<double> out;
  auto xs = merged_breakpoints(f, g);
  for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
    double d0 = f(xs[i]) - g(xs[i]);
    double d1 = f(xs[i + 1]) - g(xs[i + 1]);
    if ((d0 > 0 && d1 < 0) || (d0 < 0 && d1 > 0)) {
      double t = d0 / (d0 - d1);
      out.push_back(xs[i] + t * (xs[i + 1] - xs[i]));
    }
  }
  return out;
}

PLMap reknot(const PLMap& f, const std::vector<double>& xs) {
  std::vector<Knot> out;
  out.reserve(xs.size());
  for (double x : xs) out.push_back({x, f(x)});
  require(!out.empty() && out.front().x == 0.0 && out.back().x == 1.0,
          "ParseError", "re-knot grid must span [0,1]");
  return PLMap(out);
}

double eval_graph(const std::vector<Knot>& graph, double x) {
  require(graph.size() >= 2, "ParseError", "graph needs at least two knots");
  if (x <= graph.front().x) return graph.front().y;
  if (x >= graph.back().x) return graph.back().y;
  std::size_t hi = 1;
  while (graph[hi].x < x) ++hi;
  const Knot &a = graph[hi - 1], &b = graph[hi];
  if (b.x == a.x) return b.y;
  double w = (x - a.x) / (b.x - a.x);
  return a.y + w * (b.y - a.y);
}

std::vector<Knot> compose_unclamped(const std::vector<Knot>& graph,
                                    const PLMap& inner) {
  require(graph.size() >= 2, "ParseError", "graph needs at least two knots");
  std::vector<double> xs;
  const auto& ik = inner.knots();
  for (const Knot& k : ik) xs.push_back(k.x);
  for (std::size_t i = 0; i + 1 < ik.size(); ++i) {
    double y0 = ik[i].y, y1 = ik[i + 1].y;
    if (y0 == y1) continue;
    double lo = std::min(y0, y1), hi = std::max(y0, y1);
    for (const Knot& b : graph) {
      if (b.x <= lo || b.x >= hi) continue;
      double t = (b.x - y0) / (y1 - y0);
      xs.push_back(ik[i].x + t * (ik[i + 1].x - ik[i].x));
    }
  }
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end(),
                       [](double a, double b) { return b - a <= kMergeTol; }),
           xs.end());
  std::vector<Knot> out;
  out.reserve(xs.size());
  for (double x : xs) out.push_back({x, eval_graph(graph, inner(x))});
  return out;
}

}  // namespace ddrop
