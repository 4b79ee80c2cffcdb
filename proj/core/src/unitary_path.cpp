#include "ddrop/unitary_path.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "ddrop/config.hpp"
#include "ddrop/error.hpp"

namespace ddrop {

struct UnitaryPath::Node {
  enum class Kind {
    Identity,
    Constant,
    PermPair,
    Knots,
    Product,
    Adjoint,
    Reparam,
    Piecewise,
    BlockLift,
    Implicit
  };
  Kind kind = Kind::Identity;
  i128 dim = 0;

  Mat u;                            // Constant
  std::vector<i64> p0, tau;         // PermPair: u(s) = P0 * exp(s log tau)
  std::vector<double> sk;           // Knots pins / Piecewise breaks
  std::vector<Mat> uk;              // Knots pins
  std::vector<SpectralPath> segs;   // Knots segment geodesics
  std::shared_ptr<const Node> a, b;  // children (Product, Adjoint, Reparam,
                                     // BlockLift inner)
  std::vector<PLMap> times;          // Reparam [0], BlockLift block times
  std::vector<std::shared_ptr<const Node>> pieces;  // Piecewise
  std::vector<i64> post;             // BlockLift column relocation
};

namespace {

using Node = UnitaryPath::Node;
using Kind = Node::Kind;

constexpr double kPi = std::numbers::pi;

Mat node_at(const Node& n, double s);

double node_lipschitz(const Node& n) {
  switch (n.kind) {
    case Kind::Identity:
    case Kind::Constant:
      return 0.0;
    case Kind::PermPair:
    case Kind::Implicit:
      return kPi;
    case Kind::Knots: {
      double best = 0.0;
      for (size_t j = 0; j < n.segs.size(); ++j) {
        double width = n.sk[j + 1] - n.sk[j];
        double top = 0.0;
        for (Eigen::Index i = 0; i < n.segs[j].thetas.size(); ++i)
          top = std::max(top, std::fabs(n.segs[j].thetas(i)));
        best = std::max(best, top / width);
      }
      return best;
    }
    case Kind::Product:
      return node_lipschitz(*n.a) + node_lipschitz(*n.b);
    case Kind::Adjoint:
      return node_lipschitz(*n.a);
    case Kind::Reparam:
      return node_lipschitz(*n.a) * n.times[0].max_slope();
    case Kind::Piecewise: {
      double best = 0.0;
      for (size_t j = 0; j < n.pieces.size(); ++j)
        best = std::max(best, node_lipschitz(*n.pieces[j]) /
                                  (n.sk[j + 1] - n.sk[j]));
      return best;
    }
    case Kind::BlockLift: {
      double slope = 0.0;
      for (const PLMap& t : n.times) slope = std::max(slope, t.max_slope());
      return node_lipschitz(*n.a) * slope;
    }
  }
  return 0.0;
}

i64 concrete_dim(const Node& n) {
  require(n.dim <= static_cast<i128>(kMatCap), "Overflow",
          "unitary path too large to materialize");
  return static_cast<i64>(n.dim);
}

Mat node_at(const Node& n, double s) {
  switch (n.kind) {
    case Kind::Identity: {
      i64 d = concrete_dim(n);
      return Mat::Identity(d, d);
    }
    case Kind::Constant:
      return n.u;
    case Kind::PermPair: {
      Mat g = perm_geodesic(n.tau, s);
      Mat out(g.rows(), g.cols());
      for (Eigen::Index i = 0; i < g.rows(); ++i) out.row(n.p0[i]) = g.row(i);
      return out;
    }
    case Kind::Knots: {
      auto it = std::upper_bound(n.sk.begin(), n.sk.end(), s);
      size_t hi = static_cast<size_t>(it - n.sk.begin());
      if (hi >= n.sk.size()) return n.uk.back();
      if (hi == 0) return n.uk.front();
      size_t lo = hi - 1;
      if (s == n.sk[lo]) return n.uk[lo];
      double w = (s - n.sk[lo]) / (n.sk[hi] - n.sk[lo]);
      return n.uk[lo] * n.segs[lo].at(w);
    }
    case Kind::Product:
      return node_at(*n.a, s) * node_at(*n.b, s);
    case Kind::Adjoint:
      return node_at(*n.a, s).adjoint();
    case Kind::Reparam:
      return node_at(*n.a, n.times[0](s));
    case Kind::Piecewise: {
      size_t j = 0;
      while (j + 2 < n.sk.size() && s >= n.sk[j + 1]) ++j;
      double t = (s - n.sk[j]) / (n.sk[j + 1] - n.sk[j]);
      return node_at(*n.pieces[j], std::clamp(t, 0.0, 1.0));
    }
    case Kind::BlockLift: {
      i64 total = concrete_dim(n);
      i64 d = static_cast<i64>(n.a->dim);
      Mat bd = Mat::Zero(total, total);
      for (size_t j = 0; j < n.times.size(); ++j) {
        Mat blk = node_at(*n.a, n.times[j](s));
        bd.block(static_cast<i64>(j) * d, static_cast<i64>(j) * d, d, d) = blk;
      }
      if (n.post.empty()) return bd;
      Mat out(total, total);
      for (i64 k = 0; k < total; ++k) out.col(n.post[k]) = bd.col(k);
      return out;
    }
    case Kind::Implicit:
      fail("Overflow", "implicit unitary path cannot be materialized");
  }
  fail("ParseError", "corrupt unitary path node");
}

bool node_concrete(const Node& n) {
  switch (n.kind) {
    case Kind::Implicit:
      return false;
    case Kind::Product:
      return node_concrete(*n.a) && node_concrete(*n.b);
    case Kind::Adjoint:
    case Kind::Reparam:
      return node_concrete(*n.a);
    case Kind::BlockLift:
      return node_concrete(*n.a);
    case Kind::Piecewise:
      return std::all_of(n.pieces.begin(), n.pieces.end(),
                         [](const auto& p) { return node_concrete(*p); });
    default:
      return true;
  }
}

std::shared_ptr<Node> fresh(Kind k) {
  auto n = std::make_shared<Node>();
  n->kind = k;
  return n;
}

}  // namespace

UnitaryPath UnitaryPath::identity(i128 dim) {
  require(dim > 0, "NonPositive", "unitary path dimension must be positive");
  auto n = fresh(Kind::Identity);
  n->dim = dim;
  return UnitaryPath(n);
}

UnitaryPath UnitaryPath::constant(Mat u) {
  require(u.rows() == u.cols() && u.rows() > 0, "DimensionMismatch",
          "constant path needs a square matrix");
  auto n = fresh(Kind::Constant);
  n->dim = u.rows();
  n->u = std::move(u);
  return UnitaryPath(n);
}

UnitaryPath UnitaryPath::perm_pair(std::vector<i64> p0, std::vector<i64> p1) {
  require(p0.size() == p1.size() && !p0.empty(), "DimensionMismatch",
          "perm_pair: sizes differ");
  auto n = fresh(Kind::PermPair);
  n->dim = static_cast<i128>(p0.size());
  n->tau = perm_compose(perm_inverse(p0), p1);
  n->p0 = std::move(p0);
  return UnitaryPath(n);
}

UnitaryPath UnitaryPath::knots(std::vector<double> s, std::vector<Mat> u) {
  require(s.size() == u.size() && s.size() >= 2, "ParseError",
          "knot path: pin count mismatch");
  require(s.front() == 0.0 && s.back() == 1.0, "ParseError",
          "knot path: pins must span [0,1]");
  for (size_t j = 1; j < s.size(); ++j)
    require(s[j] > s[j - 1], "ParseError", "knot path: pins must increase");
  auto n = fresh(Kind::Knots);
  n->dim = u.front().rows();
  for (const Mat& m : u)
    require(m.rows() == u.front().rows() && m.cols() == m.rows(),
            "DimensionMismatch", "knot path: pin sizes differ");
  n->segs.reserve(s.size() - 1);
  for (size_t j = 0; j + 1 < s.size(); ++j)
    n->segs.push_back(unitary_log_path(u[j].adjoint() * u[j + 1]));
  n->sk = std::move(s);
  n->uk = std::move(u);
  return UnitaryPath(n);
}

UnitaryPath UnitaryPath::product(UnitaryPath a, UnitaryPath b) {
  require(a.node_ && b.node_, "ParseError", "product of empty paths");
  require(a.dim() == b.dim(), "DimensionMismatch", "product: dims differ");
  auto n = fresh(Kind::Product);
  n->dim = a.dim();
  n->a = a.node_;
  n->b = b.node_;
  return UnitaryPath(n);
}

UnitaryPath UnitaryPath::adjoint_of(UnitaryPath a) {
  require(a.node_ != nullptr, "ParseError", "adjoint of empty path");
  auto n = fresh(Kind::Adjoint);
  n->dim = a.dim();
  n->a = a.node_;
  return UnitaryPath(n);
}

UnitaryPath UnitaryPath::reparam(UnitaryPath a, PLMap time) {
  require(a.node_ != nullptr, "ParseError", "reparam of empty path");
  auto n = fresh(Kind::Reparam);
  n->dim = a.dim();
  n->a = a.node_;
  n->times.push_back(std::move(time));
  return UnitaryPath(n);
}

UnitaryPath UnitaryPath::piecewise(std::vector<double> breaks,
                                   std::vector<UnitaryPath> pieces) {
  require(breaks.size() == pieces.size() + 1 && !pieces.empty(), "ParseError",
          "piecewise: need one more break than pieces");
  require(breaks.front() == 0.0 && breaks.back() == 1.0, "ParseError",
          "piecewise: breaks must span [0,1]");
  for (size_t j = 1; j < breaks.size(); ++j)
    require(breaks[j] > breaks[j - 1], "ParseError",
            "piecewise: breaks must increase");
  auto n = fresh(Kind::Piecewise);
  n->dim = pieces.front().dim();
  for (const auto& p : pieces)
    require(p.dim() == n->dim, "DimensionMismatch", "piecewise: dims differ");
  n->sk = std::move(breaks);
  for (auto& p : pieces) n->pieces.push_back(p.node_);
  return UnitaryPath(n);
}

UnitaryPath UnitaryPath::block_lift(UnitaryPath inner, std::vector<PLMap> times,
                                    std::vector<i64> post_perm) {
  require(inner.node_ && !times.empty(), "ParseError",
          "block_lift: empty inner path or times");
  auto n = fresh(Kind::BlockLift);
  n->dim = inner.dim() * static_cast<i128>(times.size());
  require(post_perm.empty() ||
              static_cast<i128>(post_perm.size()) == n->dim,
          "DimensionMismatch", "block_lift: relocation size mismatch");
  n->a = inner.node_;
  n->times = std::move(times);
  n->post = std::move(post_perm);
  return UnitaryPath(n);
}

UnitaryPath UnitaryPath::implicit_permutation(i128 dim) {
  require(dim > 0, "NonPositive", "unitary path dimension must be positive");
  auto n = fresh(Kind::Implicit);
  n->dim = dim;
  return UnitaryPath(n);
}

i128 UnitaryPath::dim() const {
  require(node_ != nullptr, "ParseError", "empty unitary path");
  return node_->dim;
}

bool UnitaryPath::concrete() const {
  return node_ != nullptr && node_concrete(*node_);
}

Mat UnitaryPath::at(double s) const {
  require(node_ != nullptr, "ParseError", "empty unitary path");
  require(s >= 0.0 && s <= 1.0, "ParseError", "path parameter outside [0,1]");
  return node_at(*node_, s);
}

double UnitaryPath::lipschitz_bound() const {
  require(node_ != nullptr, "ParseError", "empty unitary path");
  return node_lipschitz(*node_);
}

namespace {

std::optional<std::vector<i64>> node_endpoint_perm(const Node& n, int end) {
  switch (n.kind) {
    case Kind::Identity: {
      if (n.dim > kMatCap) return std::nullopt;
      std::vector<i64> id(static_cast<size_t>(n.dim));
      for (size_t i = 0; i < id.size(); ++i) id[i] = static_cast<i64>(i);
      return id;
    }
    case Kind::PermPair:
      return end == 0 ? n.p0 : perm_compose(n.p0, n.tau);
    case Kind::Adjoint: {
      auto c = node_endpoint_perm(*n.a, end);
      if (!c) return std::nullopt;
      return perm_inverse(*c);
    }
    case Kind::Product: {
      auto l = node_endpoint_perm(*n.a, end);
      auto r = node_endpoint_perm(*n.b, end);
      if (!l || !r) return std::nullopt;
      return perm_compose(*l, *r);
    }
    case Kind::Piecewise: {
      const Node& piece = end == 0 ? *n.pieces.front() : *n.pieces.back();
      return node_endpoint_perm(piece, end);
    }
    default:
      return std::nullopt;
  }
}

}  // namespace

std::optional<std::vector<i64>> UnitaryPath::endpoint_perm(int end) const {
  require(node_ != nullptr, "ParseError", "empty unitary path");
  require(end == 0 || end == 1, "ParseError", "endpoint must be 0 or 1");
  return node_endpoint_perm(*node_, end);
}

double max_unitarity_defect(const UnitaryPath& u, int grid_n) {
  require(grid_n >= 2, "NonPositive", "grid must have at least two points");
  double worst = 0.0;
  for (int i = 0; i < grid_n; ++i) {
    double s = static_cast<double>(i) / (grid_n - 1);
    worst = std::max(worst, unitarity_defect(u.at(s)));
  }
  return worst;
}

}  // namespace ddrop
