#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "contlog/hilbert.hpp"
#include "contlog/metric_group.hpp"
#include "contlog/rtree.hpp"
#include "contlog/structure.hpp"

namespace contlog {

class ActionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Predicate symbol of the ternary predicate ∘_mn.
inline std::string circ_name(int m, int n) { return "circ_{" + std::to_string(m) + "," + std::to_string(n) + "}"; }

using GthFn = std::function<int(int m, double delta)>;
using OrtFn = std::function<int(int m)>;

/// Finite sample of the space: one shared point table, B_n = points within n of the basepoint.
template <GeodesicSpace S>
struct BallNets {
  std::vector<typename S::Point> points;
  double mesh = 0.0;  // every point of each ball is within `mesh` of a net point of that ball
};

/// Points k·step in [−n_max, n_max].
inline BallNets<Line> line_ball_nets(int n_max, double step) {
  BallNets<Line> b;
  const int k = static_cast<int>(std::floor(n_max / step + 1e-9));
  for (int i = -k; i <= k; ++i) b.points.push_back(i * step);
  b.mesh = step / 2.0;
  return b;
}

/// Tree sample points (vertices and every `step` along edges) within n_max of the basepoint.
inline BallNets<FiniteTree> tree_ball_nets(const FiniteTree& t, int n_max, double step) {
  BallNets<FiniteTree> b;
  for (const auto& p : t.sample_points(step)) {
    if (t.distance(t.basepoint(), p) <= n_max + kDefaultTolerance) b.points.push_back(p);
  }
  b.mesh = step;
  return b;
}

/// Grid points of spacing `step` inside B_{n_max}.
inline BallNets<HilbertSpace> hilbert_ball_nets(const HilbertSpace& h, int n_max, double step) {
  BallNets<HilbertSpace> b;
  const int d = h.dimension();
  const int k = static_cast<int>(std::floor(n_max / step + 1e-9));
  std::vector<int> idx(static_cast<std::size_t>(d), -k);
  while (true) {
    Vec p(d);
    for (int i = 0; i < d; ++i) p[i] = idx[static_cast<std::size_t>(i)] * step;
    if (p.norm() <= n_max + kDefaultTolerance) b.points.push_back(p);
    int i = 0;
    while (i < d && ++idx[static_cast<std::size_t>(i)] > k) idx[static_cast<std::size_t>(i++)] = -k;
    if (i == d) break;
  }
  b.mesh = step * std::sqrt(static_cast<double>(d));
  return b;
}

struct GthViolation {
  Handle g = 0;
  int m = 0;
  double delta = 0.0;
  std::string point;
  double norm = 0.0;   // d(0, g·x)
  int bound = 0;       // gth(m, δ)
};

struct GthReport {
  std::vector<GthViolation> violations;
  std::vector<std::string> monotonicity;  // (m, δ) where gth(m+1, δ) < gth(m, δ)
  bool ok() const { return violations.empty() && monotonicity.empty(); }
};

/// A(G, X): a metric group acting by isometries on a pointed geodesic space, with gth, ort
/// and continuity moduli for the G-variable of each ∘_mn.
template <GeodesicSpace S>
class ActionStructure {
 public:
  using Point = typename S::Point;
  using Isometry = typename S::Isometry;
  using IsometryOf = std::function<Isometry(Handle)>;

  static constexpr bool kHilbert = std::is_same_v<S, HilbertSpace>;

  ActionStructure(MetricGroup group, S space, IsometryOf rho, GthFn gth, BallNets<S> nets, int n_max)
      : group_(std::move(group)), space_(std::move(space)), rho_(std::move(rho)), gth_(std::move(gth)),
        nets_(std::move(nets)), n_max_(n_max) {
    if (n_max_ < 1) throw ActionError("n_max must be at least 1");
    if constexpr (kHilbert) {
      ort_ = [](int m) { return compute_ort(m).n; };
    } else {
      ort_ = [](int m) { return m; };
    }
  }

  const MetricGroup& group() const { return group_; }
  const S& space() const { return space_; }
  const BallNets<S>& nets() const { return nets_; }
  int n_max() const { return n_max_; }
  Isometry isometry(Handle g) const { return rho_(g); }
  Point act(Handle g, const Point& x) const { return space_.apply(rho_(g), x); }
  int gth(int m, double delta) const { return gth_(m, delta); }

  void set_ort(OrtFn ort) { ort_ = std::move(ort); ort_cache_.clear(); }
  int ort(int m) const {
    auto it = ort_cache_.find(m);
    if (it != ort_cache_.end()) return it->second;
    return ort_cache_[m] = ort_(m);
  }

  /// Declares that every g fixes the basepoint, so each ball is invariant and ∘_mm is
  /// the distance d(g·x, y).
  void set_preserves_balls(bool on) { preserves_balls_ = on; }
  bool preserves_balls() const { return preserves_balls_; }

  /// Pairs exposed as predicates. Trees: m <= n. Hilbert spaces: ort(m) < n.
  bool pair_allowed(int m, int n) const {
    if (m < 1 || n < m) return false;
    if (preserves_balls_) return true;
    if constexpr (kHilbert) return ort(m) < n;
    return true;
  }

  void set_group_modulus(int m, int n, Modulus mod) { gamma_.insert_or_assign({m, n}, std::move(mod)); }
  void set_group_modulus(const std::function<Modulus(int, int)>& fn) { gamma_fn_ = fn; }
  std::optional<Modulus> group_modulus(int m, int n) const {
    auto it = gamma_.find({m, n});
    if (it != gamma_.end()) return it->second;
    if (gamma_fn_) return gamma_fn_(m, n);
    return std::nullopt;
  }

  /// Modulus for the ball variables: id on trees, 3·id on Hilbert spaces.
  Modulus ball_modulus() const { return kHilbert && !preserves_balls_ ? Modulus::lipschitz(3.0) : Modulus::identity(); }

  double norm(const Point& p) const { return space_.distance(space_.basepoint(), p); }

  /// Precondition of circ: m <= n on trees, ort(m) <= n on Hilbert spaces.
  bool circ_allowed(int m, int n) const {
    if (m < 1 || n < m) return false;
    if (preserves_balls_) return true;
    if constexpr (kHilbert) return ort(m) <= n;
    return true;
  }

  /// length([g·x, y] ∩ B_n) for x, y in B_m.
  double circ(int m, int n, Handle g, const Point& x, const Point& y) const {
    if (!circ_allowed(m, n)) throw ActionError("index pair (" + std::to_string(m) + ", " + std::to_string(n) + ") not allowed");
    return circ_unchecked(n, act(g, x), y);
  }

  double circ_unchecked(int n, const Point& gx, const Point& y) const {
    if constexpr (kHilbert) {
      return chord_length(gx, y, n);
    } else {
      return segment_ball_length(space_, gx, y, n);
    }
  }

  /// Net points of B_n.
  std::vector<Point> ball(int n) const {
    std::vector<Point> out;
    for (const auto& p : nets_.points) {
      if (norm(p) <= n + kDefaultTolerance) out.push_back(p);
    }
    return out;
  }

  /// Largest |d(g·x, g·y) − d(x, y)| over the carrier and all net pairs of B_m.
  double isometry_defect(int m) const {
    double worst = 0.0;
    const auto pts = ball(m);
    for (Handle g : group_.carrier()) {
      const auto rho = rho_(g);
      for (const auto& x : pts) {
        const auto gx = space_.apply(rho, x);
        for (const auto& y : pts) {
          worst = std::max(worst, std::abs(space_.distance(gx, space_.apply(rho, y)) - space_.distance(x, y)));
        }
      }
    }
    return worst;
  }

 private:
  MetricGroup group_;
  S space_;
  IsometryOf rho_;
  GthFn gth_;
  OrtFn ort_;
  BallNets<S> nets_;
  int n_max_;
  bool preserves_balls_ = false;
  mutable std::map<int, int> ort_cache_;
  std::map<std::pair<int, int>, Modulus> gamma_;
  std::function<Modulus(int, int)> gamma_fn_;
};

/// Points r·e^{iθ} of ℂ (realified as ℝ²) for r = 0, step, 2·step, ... <= n_max and
/// `angles` equally spaced θ.
inline BallNets<HilbertSpace> circle_nets(int n_max, double step, int angles) {
  BallNets<HilbertSpace> b;
  b.points.push_back(Vec::Zero(2));
  const int k = static_cast<int>(std::floor(n_max / step + 1e-9));
  for (int i = 1; i <= k; ++i) {
    for (int j = 0; j < angles; ++j) {
      const double t = 2.0 * std::numbers::pi * j / angles;
      b.points.push_back((Vec(2) << i * step * std::cos(t), i * step * std::sin(t)).finished());
    }
  }
  b.mesh = std::max(step, k * step * 2.0 * std::sin(std::numbers::pi / angles));
  return b;
}

/// Linear unitary action of `group` on the realified ℂ^d through `rep` (handles index
/// rep.matrices). Every ball is invariant and gth = id.
inline ActionStructure<HilbertSpace> unitary_action(MetricGroup group, const UnitaryRep& rep, BallNets<HilbertSpace> nets,
                                                    int n_max) {
  if (!rep.is_unitary()) throw ActionError("representation is not unitary");
  const HilbertSpace h(2 * rep.dimension(), true);
  std::vector<Mat> real;
  for (const auto& u : rep.matrices) real.push_back(realify(u));
  ActionStructure<HilbertSpace> a(
      std::move(group), h,
      [real, dim = h.dimension()](Handle g) {
        if (g < 0 || g >= static_cast<Handle>(real.size())) throw ActionError("group element outside the representation");
        return AffineIsometry{real[static_cast<std::size_t>(g)], Vec::Zero(dim)};
      },
      [](int m, double) { return m; }, std::move(nets), n_max);
  a.set_preserves_balls(true);
  a.set_ort([](int m) { return m; });
  return a;
}

/// gth contract on the nets: d(1, g) = δ < 1 and x ∈ B_m imply g·x ∈ B_{gth(m, δ)}; also
/// checks that gth is increasing in m on the observed δ values.
template <GeodesicSpace S>
GthReport check_gth(const ActionStructure<S>& a, int m_max, double tol = kDefaultTolerance, std::size_t limit = 20) {
  GthReport r;
  const auto& g = a.group();
  std::vector<double> deltas;
  for (Handle h : g.carrier()) {
    const double delta = g.distance(g.identity(), h);
    if (delta >= 1.0) continue;
    deltas.push_back(delta);
    for (int m = 1; m <= m_max; ++m) {
      const int bound = a.gth(m, delta);
      for (const auto& x : a.ball(m)) {
        const double nrm = a.norm(a.act(h, x));
        if (nrm > bound + tol && r.violations.size() < limit) {
          r.violations.push_back({h, m, delta, a.space().describe(x), nrm, bound});
        }
      }
    }
  }
  for (double delta : deltas) {
    for (int m = 1; m < m_max; ++m) {
      if (a.gth(m + 1, delta) < a.gth(m, delta)) {
        r.monotonicity.push_back("m=" + std::to_string(m) + " delta=" + std::to_string(delta));
      }
    }
  }
  return r;
}

/// Structure for logic-core: the group sort G, ball sorts B1..B{n_max} over one shared point
/// table (so every I_mn is the identity on handles), and ∘_mn for every allowed pair with
/// n <= n_max (or the declared `pairs`). Ball variables get id (trees) or 3·id (Hilbert); the
/// G-variable gets γ^{m,n}_G.
template <GeodesicSpace S>
Structure expose_predicates(const ActionStructure<S>& a, const std::vector<std::pair<int, int>>& pairs = {},
                            double group_mesh = 0.0) {
  std::vector<std::pair<int, int>> exposed = pairs;
  if (exposed.empty()) {
    for (int m = 1; m <= a.n_max(); ++m)
      for (int n = m; n <= a.n_max(); ++n)
        if (a.pair_allowed(m, n)) exposed.emplace_back(m, n);
  }
  for (const auto& [m, n] : exposed) {
    if (!a.pair_allowed(m, n)) {
      throw ActionError("pair (" + std::to_string(m) + ", " + std::to_string(n) + ") violates the ort constraint");
    }
    if (n > a.n_max()) throw ActionError("pair index exceeds n_max");
  }
  Structure s;
  add_group_sort(s, a.group(), "G", group_mesh);
  using Point = typename S::Point;
  auto table = std::make_shared<std::vector<Point>>();
  std::optional<Handle> origin;
  for (const auto& p : a.nets().points) {
    if (a.norm(p) <= a.n_max() + kDefaultTolerance) {
      if (!origin && a.norm(p) <= kDefaultTolerance) origin = static_cast<Handle>(table->size());
      table->push_back(p);
    }
  }
  if (!origin) {
    origin = static_cast<Handle>(table->size());
    table->push_back(a.space().basepoint());
  }
  const S space = a.space();
  const MetricFn metric = [table, space](Handle x, Handle y) {
    return space.distance((*table)[static_cast<std::size_t>(x)], (*table)[static_cast<std::size_t>(y)]);
  };
  const auto describe = [table, space](Handle h) { return space.describe((*table)[static_cast<std::size_t>(h)]); };
  for (int n = 1; n <= a.n_max(); ++n) {
    std::vector<Handle> net;
    for (std::size_t i = 0; i < table->size(); ++i) {
      if (a.norm((*table)[i]) <= n + kDefaultTolerance) net.push_back(static_cast<Handle>(i));
    }
    s.add_sort({{ball_sort_name(n), SortKind::ball, n, 2.0 * n}, metric, net, a.nets().mesh, *origin, describe});
  }
  auto shared = std::make_shared<ActionStructure<S>>(a);
  for (const auto& [m, n] : exposed) {
    const auto gamma = a.group_modulus(m, n);
    if (!gamma) throw ActionError("no modulus registered for the G-variable of " + circ_name(m, n));
    const std::string name = circ_name(m, n);
    s.add_predicate({{name, {"G", ball_sort_name(m), ball_sort_name(m)}, {0.0, static_cast<double>(m + n)}},
                     [shared, table, n](std::span<const Handle> args) {
                       const auto gx = shared->act(args[0], (*table)[static_cast<std::size_t>(args[1])]);
                       return shared->circ_unchecked(n, gx, (*table)[static_cast<std::size_t>(args[2])]);
                     },
                     {}});
    s.register_modulus(name, 0, *gamma);
    s.register_modulus(name, 1, a.ball_modulus());
    s.register_modulus(name, 2, a.ball_modulus());
  }
  return s;
}

}  // namespace contlog
