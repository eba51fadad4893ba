#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <limits>
#include <optional>
#include <queue>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "contlog/bracket.hpp"

namespace contlog {

/// Geodesic metric space with unique geodesics: distance, points along segments, basepoint 0,
/// and an isometry group acting on points.
template <class S>
concept GeodesicSpace = requires(const S& s, const typename S::Point& p, const typename S::Isometry& g, double t) {
  { s.distance(p, p) } -> std::convertible_to<double>;
  { s.point_along(p, p, t) } -> std::same_as<typename S::Point>;
  { s.basepoint() } -> std::same_as<typename S::Point>;
  { s.apply(g, p) } -> std::same_as<typename S::Point>;
  { s.compose(g, g) } -> std::same_as<typename S::Isometry>;
  { s.inverse(g) } -> std::same_as<typename S::Isometry>;
};

class GeometryError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// ---------------------------------------------------------------------------------------------
// Line backend

/// x ↦ s·x + t. Isometries have s = ±1.
struct LineIsometry {
  double s = 1.0;
  double t = 0.0;
  friend bool operator==(const LineIsometry&, const LineIsometry&) = default;
};

class Line {
 public:
  using Point = double;
  using Isometry = LineIsometry;

  double distance(double x, double y) const { return std::abs(x - y); }
  double point_along(double p, double q, double s) const {
    const double d = std::abs(q - p);
    if (d == 0.0) return p;
    s = std::clamp(s, 0.0, d);
    return q > p ? p + s : p - s;
  }
  double basepoint() const { return 0.0; }
  double apply(const LineIsometry& g, double x) const { return g.s * x + g.t; }
  LineIsometry compose(const LineIsometry& a, const LineIsometry& b) const { return {a.s * b.s, a.s * b.t + a.t}; }
  LineIsometry inverse(const LineIsometry& g) const {
    if (g.s == 0.0) throw GeometryError("degenerate line map");
    return {1.0 / g.s, -g.t / g.s};
  }
  LineIsometry identity() const { return {}; }
  bool same(const LineIsometry& a, const LineIsometry& b, double tol = kDefaultTolerance) const {
    return std::abs(a.s - b.s) <= tol && std::abs(a.t - b.t) <= tol;
  }
  bool is_isometry(const LineIsometry& g, double tol = kDefaultTolerance) const { return std::abs(std::abs(g.s) - 1.0) <= tol; }
  static LineIsometry translation(double t) { return {1.0, t}; }
  /// Reflection fixing c: x ↦ 2c − x.
  static LineIsometry reflection(double c) { return {-1.0, 2.0 * c}; }
  std::string describe(double x) const {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
  }
};

// ---------------------------------------------------------------------------------------------
// Finite metric tree backend

/// A vertex, or an interior point of an edge at `offset` from the edge's first endpoint.
struct TreePoint {
  int vertex = -1;
  int edge = -1;
  double offset = 0.0;
  friend bool operator==(const TreePoint&, const TreePoint&) = default;
};

/// Length-preserving vertex permutation, extended affinely along edges.
struct TreeAutomorphism {
  std::vector<int> perm;
  friend bool operator==(const TreeAutomorphism&, const TreeAutomorphism&) = default;
};

class FiniteTree {
 public:
  using Point = TreePoint;
  using Isometry = TreeAutomorphism;

  struct Edge {
    int u = 0;
    int v = 0;
    double length = 1.0;
  };

  FiniteTree(int vertices, std::vector<Edge> edges, int basepoint = 0)
      : n_(vertices), edges_(std::move(edges)), base_(basepoint) {
    if (n_ < 1) throw GeometryError("tree needs at least one vertex");
    if (static_cast<int>(edges_.size()) != n_ - 1) throw GeometryError("a tree on n vertices has n-1 edges");
    if (base_ < 0 || base_ >= n_) throw GeometryError("basepoint is not a vertex");
    between_.assign(static_cast<std::size_t>(n_ * n_), -1);
    adj_.assign(static_cast<std::size_t>(n_), {});
    for (std::size_t e = 0; e < edges_.size(); ++e) {
      const auto& ed = edges_[e];
      if (ed.u < 0 || ed.v < 0 || ed.u >= n_ || ed.v >= n_ || ed.u == ed.v) throw GeometryError("bad edge endpoints");
      if (!(ed.length > 0.0) || !std::isfinite(ed.length)) throw GeometryError("edge lengths must be positive");
      if (between_[idx(ed.u, ed.v)] >= 0) throw GeometryError("parallel edges");
      between_[idx(ed.u, ed.v)] = between_[idx(ed.v, ed.u)] = static_cast<int>(e);
      adj_[static_cast<std::size_t>(ed.u)].push_back(ed.v);
      adj_[static_cast<std::size_t>(ed.v)].push_back(ed.u);
    }
    dist_.assign(static_cast<std::size_t>(n_ * n_), std::numeric_limits<double>::infinity());
    next_.assign(static_cast<std::size_t>(n_ * n_), -1);
    for (int t = 0; t < n_; ++t) {
      // Search from t: parent pointers give the next hop toward t.
      std::queue<int> q;
      q.push(t);
      dist_[idx(t, t)] = 0.0;
      next_[idx(t, t)] = t;
      while (!q.empty()) {
        const int u = q.front();
        q.pop();
        for (int w : adj_[static_cast<std::size_t>(u)]) {
          if (std::isfinite(dist_[idx(w, t)])) continue;
          dist_[idx(w, t)] = dist_[idx(u, t)] + edges_[static_cast<std::size_t>(between_[idx(u, w)])].length;
          next_[idx(w, t)] = u;
          q.push(w);
        }
      }
    }
    for (double d : dist_) {
      if (!std::isfinite(d)) throw GeometryError("tree is not connected");
    }
  }

  int vertex_count() const { return n_; }
  const std::vector<Edge>& edges() const { return edges_; }
  double vertex_distance(int a, int b) const { return dist_[idx(a, b)]; }
  int edge_between(int a, int b) const { return between_[idx(a, b)]; }

  Point vertex(int v) const {
    if (v < 0 || v >= n_) throw GeometryError("no such vertex");
    return {v, -1, 0.0};
  }

  /// Canonical point at `offset` from the first endpoint of edge `e`.
  Point on_edge(int e, double offset) const {
    const auto& ed = edges_.at(static_cast<std::size_t>(e));
    if (offset < -kSnap || offset > ed.length + kSnap) throw GeometryError("edge offset out of range");
    if (offset <= kSnap) return vertex(ed.u);
    if (offset >= ed.length - kSnap) return vertex(ed.v);
    return {-1, e, offset};
  }

  Point basepoint() const { return vertex(base_); }

  double distance(const Point& p, const Point& q) const {
    if (p.edge >= 0 && p.edge == q.edge) return std::abs(p.offset - q.offset);
    double best = std::numeric_limits<double>::infinity();
    for (const auto& [a, da] : ends(p)) {
      for (const auto& [b, db] : ends(q)) best = std::min(best, da + dist_[idx(a, b)] + db);
    }
    return best;
  }

  /// Point at distance s from p on the geodesic [p, q] (s clamped to [0, d(p,q)]).
  Point point_along(const Point& p, const Point& q, double s) const {
    const double total = distance(p, q);
    s = std::clamp(s, 0.0, total);
    if (p.edge >= 0 && p.edge == q.edge) return on_edge(p.edge, p.offset + (q.offset > p.offset ? s : -s));
    int a = -1, b = -1;
    double da = 0.0, db = 0.0, best = std::numeric_limits<double>::infinity();
    for (const auto& [x, dx] : ends(p)) {
      for (const auto& [y, dy] : ends(q)) {
        const double len = dx + dist_[idx(x, y)] + dy;
        if (len < best) {
          best = len;
          a = x;
          b = y;
          da = dx;
          db = dy;
        }
      }
    }
    if (s <= da) return toward(p, a, s);
    double r = s - da;
    int cur = a;
    while (cur != b) {
      const int nxt = next_[idx(cur, b)];
      const double len = edges_[static_cast<std::size_t>(between_[idx(cur, nxt)])].length;
      if (r <= len) return from_vertex(cur, nxt, r);
      r -= len;
      cur = nxt;
    }
    if (q.vertex >= 0) return vertex(b);
    const auto& ed = edges_[static_cast<std::size_t>(q.edge)];
    r = std::min(r, db);
    return on_edge(q.edge, ed.u == b ? r : ed.length - r);
  }

  Point apply(const TreeAutomorphism& g, const Point& p) const {
    if (p.vertex >= 0) return vertex(g.perm.at(static_cast<std::size_t>(p.vertex)));
    const auto& ed = edges_[static_cast<std::size_t>(p.edge)];
    const int u = g.perm.at(static_cast<std::size_t>(ed.u));
    const int v = g.perm.at(static_cast<std::size_t>(ed.v));
    const int e = between_[idx(u, v)];
    if (e < 0) throw GeometryError("map does not preserve edges");
    const auto& img = edges_[static_cast<std::size_t>(e)];
    return {-1, e, img.u == u ? p.offset : img.length - p.offset};
  }

  TreeAutomorphism compose(const TreeAutomorphism& a, const TreeAutomorphism& b) const {
    TreeAutomorphism r;
    r.perm.resize(b.perm.size());
    for (std::size_t i = 0; i < b.perm.size(); ++i) r.perm[i] = a.perm.at(static_cast<std::size_t>(b.perm[i]));
    return r;
  }

  TreeAutomorphism inverse(const TreeAutomorphism& g) const {
    TreeAutomorphism r;
    r.perm.assign(g.perm.size(), -1);
    for (std::size_t i = 0; i < g.perm.size(); ++i) r.perm.at(static_cast<std::size_t>(g.perm[i])) = static_cast<int>(i);
    return r;
  }

  TreeAutomorphism identity() const {
    TreeAutomorphism r;
    for (int i = 0; i < n_; ++i) r.perm.push_back(i);
    return r;
  }

  bool same(const TreeAutomorphism& a, const TreeAutomorphism& b) const { return a.perm == b.perm; }

  /// True when the permutation maps edges to edges of the same length.
  bool is_isometry(const TreeAutomorphism& g, double tol = kDefaultTolerance) const {
    if (static_cast<int>(g.perm.size()) != n_) return false;
    std::vector<bool> seen(static_cast<std::size_t>(n_), false);
    for (int v : g.perm) {
      if (v < 0 || v >= n_ || seen[static_cast<std::size_t>(v)]) return false;
      seen[static_cast<std::size_t>(v)] = true;
    }
    for (const auto& ed : edges_) {
      const int e = between_[idx(g.perm[static_cast<std::size_t>(ed.u)], g.perm[static_cast<std::size_t>(ed.v)])];
      if (e < 0 || std::abs(edges_[static_cast<std::size_t>(e)].length - ed.length) > tol) return false;
    }
    return true;
  }

  /// All vertices plus points every `step` along each edge.
  std::vector<Point> sample_points(double step) const {
    std::vector<Point> out;
    for (int v = 0; v < n_; ++v) out.push_back(vertex(v));
    for (std::size_t e = 0; e < edges_.size(); ++e) {
      const double len = edges_[e].length;
      const int k = static_cast<int>(std::ceil(len / step));
      for (int i = 1; i < k; ++i) out.push_back(on_edge(static_cast<int>(e), len * i / k));
    }
    return out;
  }

  /// Vertices and edge midpoints: a nonempty fixed set of a finite automorphism group
  /// always contains one of them.
  std::vector<Point> fixed_point_candidates() const {
    std::vector<Point> out;
    for (int v = 0; v < n_; ++v) out.push_back(vertex(v));
    for (std::size_t e = 0; e < edges_.size(); ++e) out.push_back(on_edge(static_cast<int>(e), edges_[e].length / 2.0));
    return out;
  }

  std::string describe(const Point& p) const {
    if (p.vertex >= 0) return "v" + std::to_string(p.vertex);
    char buf[64];
    std::snprintf(buf, sizeof buf, "e%d@%.17g", p.edge, p.offset);
    return buf;
  }

 private:
  static constexpr double kSnap = 1e-12;

  int n_;
  std::vector<Edge> edges_;
  int base_;
  std::vector<int> between_;
  std::vector<std::vector<int>> adj_;
  std::vector<double> dist_;
  std::vector<int> next_;

  std::size_t idx(int a, int b) const { return static_cast<std::size_t>(a) * static_cast<std::size_t>(n_) + static_cast<std::size_t>(b); }

  std::vector<std::pair<int, double>> ends(const Point& p) const {
    if (p.vertex >= 0) return {{p.vertex, 0.0}};
    const auto& ed = edges_[static_cast<std::size_t>(p.edge)];
    return {{ed.u, p.offset}, {ed.v, ed.length - p.offset}};
  }

  // Point at distance s from p toward the endpoint a of p's edge.
  Point toward(const Point& p, int a, double s) const {
    if (p.vertex >= 0) return p;
    const auto& ed = edges_[static_cast<std::size_t>(p.edge)];
    return on_edge(p.edge, ed.u == a ? p.offset - s : p.offset + s);
  }

  Point from_vertex(int from, int to, double r) const {
    const int e = between_[idx(from, to)];
    const auto& ed = edges_[static_cast<std::size_t>(e)];
    return on_edge(e, ed.u == from ? r : ed.length - r);
  }
};

// ---------------------------------------------------------------------------------------------
// Geometry on any geodesic space

/// (x·y)_w = ½(d(x,w) + d(w,y) − d(x,y)).
template <GeodesicSpace S>
double gromov_product(const S& s, const typename S::Point& x, const typename S::Point& y, const typename S::Point& w) {
  return 0.5 * (s.distance(x, w) + s.distance(w, y) - s.distance(x, y));
}

/// Common point of [x,y], [y,z], [z,x]: the point of [x,y] at distance (y·z)_x from x.
template <GeodesicSpace S>
typename S::Point median(const S& s, const typename S::Point& x, const typename S::Point& y, const typename S::Point& z) {
  return s.point_along(x, y, gromov_product(s, y, z, x));
}

/// length([x,y] ∩ B_n) for the ball of radius n around the basepoint of a tree.
template <GeodesicSpace S>
double segment_ball_length(const S& s, const typename S::Point& x, const typename S::Point& y, double n) {
  if (n < 0.0) throw GeometryError("ball radius must be non-negative");
  const auto o = s.basepoint();
  const double a = s.distance(o, x);
  const double b = s.distance(o, y);
  const double p = gromov_product(s, x, y, o);
  if (p > n) return 0.0;
  return std::max(0.0, (std::min(a, n) - p) + (std::min(b, n) - p));
}

struct HyperbolicityVerdict {
  bool holds = true;
  double worst_excess = 0.0;  // max of min((x·y)_w,(y·z)_w) − (x·z)_w − ε
  std::vector<std::size_t> witness;  // x, y, z, w indices of the worst quadruple
};

/// Four-point condition on a raw distance matrix: min((x·y)_w, (y·z)_w) <= (x·z)_w + ε.
inline HyperbolicityVerdict check_zero_hyperbolic(const std::vector<std::vector<double>>& d, double eps,
                                                  double tol = kDefaultTolerance) {
  if (eps < 0.0) throw std::invalid_argument("epsilon must be non-negative");
  HyperbolicityVerdict v;
  v.worst_excess = -std::numeric_limits<double>::infinity();
  const std::size_t n = d.size();
  auto gp = [&](std::size_t x, std::size_t y, std::size_t w) { return 0.5 * (d[x][w] + d[w][y] - d[x][y]); };
  for (std::size_t w = 0; w < n; ++w)
    for (std::size_t x = 0; x < n; ++x)
      for (std::size_t y = 0; y < n; ++y)
        for (std::size_t z = 0; z < n; ++z) {
          const double e = std::min(gp(x, y, w), gp(y, z, w)) - gp(x, z, w) - eps;
          if (e > v.worst_excess) {
            v.worst_excess = e;
            v.witness = {x, y, z, w};
          }
        }
  if (n == 0) v.worst_excess = 0.0;
  v.holds = v.worst_excess <= tol;
  return v;
}

template <GeodesicSpace S>
HyperbolicityVerdict check_zero_hyperbolic(const S& s, const std::vector<typename S::Point>& pts, double eps,
                                           double tol = kDefaultTolerance) {
  std::vector<std::vector<double>> d(pts.size(), std::vector<double>(pts.size()));
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = 0; j < pts.size(); ++j) d[i][j] = s.distance(pts[i], pts[j]);
  return check_zero_hyperbolic(d, eps, tol);
}

/// Index of a net point z with |d(x,z) − d(x,y)/2| <= ε and |d(y,z) − d(x,y)/2| <= ε.
template <GeodesicSpace S>
std::optional<std::size_t> midpoint_witness(const S& s, const std::vector<typename S::Point>& pts, std::size_t i,
                                            std::size_t j, double eps, double tol = kDefaultTolerance) {
  const double half = s.distance(pts.at(i), pts.at(j)) / 2.0;
  for (std::size_t k = 0; k < pts.size(); ++k) {
    if (std::abs(s.distance(pts[i], pts[k]) - half) <= eps + tol &&
        std::abs(s.distance(pts[j], pts[k]) - half) <= eps + tol) {
      return k;
    }
  }
  return std::nullopt;
}

struct MidpointVerdict {
  bool holds = true;
  std::optional<std::pair<std::size_t, std::size_t>> failing_pair;
  std::vector<std::size_t> witnesses;  // per checked pair (i<j, row-major), index of the chosen z
};

/// Approximate midpoint property on a point set: for every pair some z in the set has
/// |d(x,z) − d(x,y)/2| <= ε and |d(y,z) − d(x,y)/2| <= ε. With a declared mesh, requires mesh <= ε/2.
template <GeodesicSpace S>
MidpointVerdict check_midpoint_property(const S& s, const std::vector<typename S::Point>& pts, double eps,
                                        std::optional<double> mesh = std::nullopt, double tol = kDefaultTolerance) {
  if (!(eps > 0.0)) throw std::invalid_argument("epsilon must be positive");
  if (mesh && *mesh > eps / 2.0 + tol) throw std::invalid_argument("net mesh too coarse for the requested epsilon");
  MidpointVerdict v;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (std::size_t j = i + 1; j < pts.size(); ++j) {
      const auto found = midpoint_witness(s, pts, i, j, eps, tol);
      if (!found) {
        v.holds = false;
        v.failing_pair = {i, j};
        return v;
      }
      v.witnesses.push_back(*found);
    }
  }
  return v;
}

// ---------------------------------------------------------------------------------------------
// Isometry classification

template <class P>
struct IsometryClassification {
  enum class Kind { elliptic, hyperbolic } kind = Kind::elliptic;
  P point{};             // fixed point (elliptic) or a point on the axis (hyperbolic)
  double length = 0.0;   // translation length, 0 for elliptic

  bool elliptic() const { return kind == Kind::elliptic; }
  bool hyperbolic() const { return kind == Kind::hyperbolic; }
};

/// Midpoint m of [p, g·p] is fixed when g is elliptic and lies on the axis when g is hyperbolic.
template <GeodesicSpace S>
IsometryClassification<typename S::Point> classify_isometry(const S& s, const typename S::Isometry& g,
                                                            double tol = kDefaultTolerance) {
  if constexpr (requires { s.is_isometry(g); }) {
    if (!s.is_isometry(g)) throw GeometryError("map is not an isometry");
  }
  const auto p = s.basepoint();
  const auto gp = s.apply(g, p);
  const auto m = s.point_along(p, gp, s.distance(p, gp) / 2.0);
  const double shift = s.distance(m, s.apply(g, m));
  IsometryClassification<typename S::Point> c;
  c.point = m;
  if (shift <= tol) return c;
  c.kind = IsometryClassification<typename S::Point>::Kind::hyperbolic;
  c.length = shift;
  return c;
}

template <class P>
struct FixedPointResult {
  enum class Certificate { fixed_point, hyperbolic_generator, hyperbolic_product, unsupported };
  Certificate certificate = Certificate::unsupported;
  std::optional<P> point;
  std::size_t first = 0;   // generator index (hyperbolic generator) or pair (product)
  std::size_t second = 0;
  IsometryClassification<P> witness;
  std::string explanation;
};

/// Common fixed point of finitely many tree automorphisms, or a certificate that none exists.
inline FixedPointResult<TreePoint> group_fixed_point(const FiniteTree& t, const std::vector<TreeAutomorphism>& gens,
                                                     double tol = kDefaultTolerance) {
  using R = FixedPointResult<TreePoint>;
  R r;
  for (std::size_t i = 0; i < gens.size(); ++i) {
    const auto c = classify_isometry(t, gens[i], tol);
    if (c.hyperbolic()) {
      r.certificate = R::Certificate::hyperbolic_generator;
      r.first = i;
      r.witness = c;
      r.explanation = "generator " + std::to_string(i) + " is hyperbolic";
      return r;
    }
  }
  const auto cands = t.fixed_point_candidates();
  auto fixed_by = [&](const TreePoint& p, const TreeAutomorphism& g) { return t.distance(p, t.apply(g, p)) <= tol; };
  for (const auto& p : cands) {
    if (std::all_of(gens.begin(), gens.end(), [&](const auto& g) { return fixed_by(p, g); })) {
      r.certificate = R::Certificate::fixed_point;
      r.point = p;
      r.explanation = "common fixed point " + t.describe(p);
      return r;
    }
  }
  // Subtrees with empty total intersection contain a disjoint pair (Helly property).
  for (std::size_t i = 0; i < gens.size(); ++i) {
    for (std::size_t j = i + 1; j < gens.size(); ++j) {
      const bool meet = std::any_of(cands.begin(), cands.end(),
                                    [&](const TreePoint& p) { return fixed_by(p, gens[i]) && fixed_by(p, gens[j]); });
      if (meet) continue;
      r.certificate = R::Certificate::hyperbolic_product;
      r.first = i;
      r.second = j;
      r.witness = classify_isometry(t, t.compose(gens[i], gens[j]), tol);
      r.explanation = "fixed sets of generators " + std::to_string(i) + " and " + std::to_string(j) +
                      " are disjoint; their product is hyperbolic";
      return r;
    }
  }
  r.explanation = "no common fixed point and no disjoint pair found";
  return r;
}

/// Line version: translations are hyperbolic, reflections fix their centre.
inline FixedPointResult<double> group_fixed_point(const Line& line, const std::vector<LineIsometry>& gens,
                                                  double tol = kDefaultTolerance) {
  using R = FixedPointResult<double>;
  R r;
  std::optional<std::pair<std::size_t, double>> centre;
  for (std::size_t i = 0; i < gens.size(); ++i) {
    const auto c = classify_isometry(line, gens[i], tol);
    if (c.hyperbolic()) {
      r.certificate = R::Certificate::hyperbolic_generator;
      r.first = i;
      r.witness = c;
      r.explanation = "generator " + std::to_string(i) + " is a translation";
      return r;
    }
    if (gens[i].s > 0.0) continue;  // identity fixes every point
    if (!centre) {
      centre = {i, c.point};
    } else if (std::abs(centre->second - c.point) > tol) {
      r.certificate = R::Certificate::hyperbolic_product;
      r.first = centre->first;
      r.second = i;
      r.witness = classify_isometry(line, line.compose(gens[centre->first], gens[i]), tol);
      r.explanation = "reflections with distinct centres compose to a translation";
      return r;
    }
  }
  r.certificate = R::Certificate::fixed_point;
  r.point = centre ? centre->second : line.basepoint();
  r.explanation = "common fixed point " + line.describe(*r.point);
  return r;
}

}  // namespace contlog
