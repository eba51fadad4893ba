#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "contlog/action.hpp"
#include "contlog/evaluator.hpp"
#include "contlog/formula.hpp"
#include "contlog/parser.hpp"
#include "contlog/rtree.hpp"
#include "contlog/structure.hpp"

namespace contlog {

struct SamplingOptions {
  std::size_t samples = 10000;
  std::uint64_t seed = 1;
  double tol = 1e-6;
  std::vector<double> eps_grid = {0.05, 0.1, 0.25, 0.45};
};

// ---------------------------------------------------------------------------------------------
// Continuity moduli

struct ModulusVerdict {
  std::string predicate;
  int slot = 0;
  std::string modulus;
  std::size_t samples = 0;
  std::uint64_t seed = 0;
  double worst_eps = 0.0;     // ε of the worst sample
  double worst_jump = 0.0;    // |R(…x…) − R(…x'…)| there
  double worst_excess = -std::numeric_limits<double>::infinity();  // max of jump − ε
  double worst_ratio = 0.0;   // max of jump / d(x, x')
  std::string witness;
  Verdict verdict = Verdict::inconclusive;
};

namespace detail {

inline void record(ModulusVerdict& v, double eps, double jump, double dist, const std::string& witness) {
  ++v.samples;
  if (dist > 0.0) v.worst_ratio = std::max(v.worst_ratio, jump / dist);
  if (jump - eps > v.worst_excess) {
    v.worst_excess = jump - eps;
    v.worst_eps = eps;
    v.worst_jump = jump;
    v.witness = witness;
  }
}

inline void finish(ModulusVerdict& v, double tol) {
  if (v.samples == 0) {
    v.verdict = Verdict::inconclusive;
    v.witness = "no pair at positive distance within the modulus";
    return;
  }
  v.verdict = v.worst_excess <= tol ? Verdict::holds : Verdict::fails;
}

template <class T>
const T& pick(const std::vector<T>& xs, std::mt19937_64& rng) {
  return xs[std::uniform_int_distribution<std::size_t>(0, xs.size() - 1)(rng)];
}

}  // namespace detail

/// Samples argument tuples from the nets and moves `slot` to a net point at distance in
/// (0, δ(ε)], preferring distances in [δ(ε)/2, δ(ε)]. The metric d is addressed as predicate "d"
/// over `metric_sort` (the first sort when empty).
inline ModulusVerdict verify_modulus(const Structure& s, const std::string& predicate, int slot, const Modulus& mod,
                                     const SamplingOptions& opts = {}, const std::string& metric_sort = {}) {
  ModulusVerdict v;
  v.predicate = predicate;
  v.slot = slot;
  v.modulus = mod.name();
  v.seed = opts.seed;
  std::vector<const SortData*> sorts;
  PredicateFn fn;
  if (predicate == "d") {
    const SortData& sd = metric_sort.empty() ? s.sort(0) : s.sort(metric_sort);
    sorts = {&sd, &sd};
    fn = [m = sd.metric](std::span<const Handle> a) { return m(a[0], a[1]); };
  } else {
    const PredicateData* p = s.find_predicate(predicate);
    if (!p) throw UnknownSymbolError("unknown predicate '" + predicate + "'");
    for (const auto& name : p->decl.arg_sorts) sorts.push_back(&s.sort(name));
    fn = p->fn;
  }
  if (slot < 0 || slot >= static_cast<int>(sorts.size())) throw std::out_of_range("argument slot out of range");
  const SortData& moved = *sorts[static_cast<std::size_t>(slot)];
  std::mt19937_64 rng(opts.seed);
  std::vector<Handle> args(sorts.size()), near, far;
  const std::size_t attempts = opts.samples * 4;
  for (std::size_t t = 0; t < attempts && v.samples < opts.samples; ++t) {
    const double eps = detail::pick(opts.eps_grid, rng);
    const double delta = mod.delta(eps);
    for (std::size_t i = 0; i < sorts.size(); ++i) args[i] = detail::pick(sorts[i]->net, rng);
    const Handle x = args[static_cast<std::size_t>(slot)];
    near.clear();
    far.clear();
    for (Handle y : moved.net) {
      const double dist = moved.metric(x, y);
      if (dist > 0.0 && dist <= delta) (dist >= delta / 2.0 ? far : near).push_back(y);
    }
    if (near.empty() && far.empty()) continue;
    const Handle y = detail::pick(far.empty() ? near : far, rng);
    const double a = fn(args);
    args[static_cast<std::size_t>(slot)] = y;
    const double b = fn(args);
    detail::record(v, eps, std::abs(a - b), moved.metric(x, y),
                   moved.describe(x) + " -> " + moved.describe(y) + " at eps=" + detail::format_number(eps));
  }
  detail::finish(v, opts.tol);
  return v;
}

/// How the Hilbert-space moduli "8γ̃" and "3 id" are read.
enum class ModulusReading {
  inequalities,    // G-slot ε ↦ γ̃(ε/8), ball slots Lipschitz 3
  scaled_function  // G-slot ε ↦ 8·γ̃(ε), ball slots δ(ε) = 3ε
};

/// Claimed moduli of ∘_mn: {G-slot, ball slots}. Trees: γ̃ and id.
template <GeodesicSpace S>
std::pair<Modulus, Modulus> circ_moduli(const ActionStructure<S>& a, int m, int n,
                                        ModulusReading reading = ModulusReading::inequalities) {
  const auto gamma = a.group_modulus(m, n);
  if (!gamma) throw ActionError("no modulus registered for the G-variable of " + circ_name(m, n));
  if (!ActionStructure<S>::kHilbert || a.preserves_balls()) return {*gamma, Modulus::identity()};
  if (reading == ModulusReading::inequalities) return {Modulus::rescaled(*gamma, 8.0), Modulus::lipschitz(3.0)};
  const Modulus g = *gamma;
  return {Modulus("8*" + g.name(), [g](double eps) { return 8.0 * g.delta(eps); }), Modulus::scaled_identity(3.0)};
}

/// Base configuration (g, x, y) around which verify_circ_modulus perturbs one slot.
template <GeodesicSpace S>
struct CircProbe {
  Handle g = 0;
  typename S::Point x;
  typename S::Point y;
};

/// Continuity of ∘_mn(g, x, y) = length([g·x, y] ∩ B_n) in one slot, on points of the space
/// rather than the nets: ball slots move to a point at distance in [δ/2, δ] inside B_m, the
/// G-slot moves to a carrier element within δ. Uses `probes` as base configurations when
/// given. The pair (m, n) is not required to satisfy the ort constraint.
template <GeodesicSpace S>
ModulusVerdict verify_circ_modulus(const ActionStructure<S>& a, int m, int n, int slot, const Modulus& mod,
                                   const SamplingOptions& opts = {}, const std::vector<CircProbe<S>>& probes = {}) {
  using Point = typename S::Point;
  if (slot < 0 || slot > 2) throw std::out_of_range("circ has three argument slots");
  if (m < 1 || n < m) throw ActionError("index pair must satisfy 1 <= m <= n");
  ModulusVerdict v;
  v.predicate = circ_name(m, n);
  v.slot = slot;
  v.modulus = mod.name();
  v.seed = opts.seed;
  const auto pts = a.ball(m);
  if (pts.empty() && probes.empty()) throw ActionError("empty net for the ball B_" + std::to_string(m));
  const auto& carrier = a.group().carrier();
  const auto& space = a.space();
  std::mt19937_64 rng(opts.seed);
  std::uniform_real_distribution<double> unit(0.5, 1.0);
  std::normal_distribution<double> gauss;
  auto value = [&](Handle g, const Point& x, const Point& y) { return a.circ_unchecked(n, a.act(g, x), y); };
  auto perturb = [&](const Point& p, double dist) -> std::optional<Point> {
    if constexpr (ActionStructure<S>::kHilbert) {
      Vec dir(p.size());
      for (Eigen::Index i = 0; i < dir.size(); ++i) dir[i] = gauss(rng);
      if (dir.norm() == 0.0) return std::nullopt;
      return Point(p + dist * dir / dir.norm());
    } else {
      const Point& z = detail::pick(pts, rng);
      if (space.distance(p, z) < dist) return std::nullopt;
      return space.point_along(p, z, dist);
    }
  };
  const std::size_t attempts = opts.samples * 20;
  for (std::size_t t = 0; t < attempts && v.samples < opts.samples; ++t) {
    const double eps = detail::pick(opts.eps_grid, rng);
    const double delta = mod.delta(eps);
    Handle g;
    Point x, y;
    if (!probes.empty()) {
      const auto& pr = probes[t % probes.size()];
      g = pr.g;
      x = pr.x;
      y = pr.y;
    } else {
      g = detail::pick(carrier, rng);
      x = detail::pick(pts, rng);
      y = detail::pick(pts, rng);
    }
    const double before = value(g, x, y);
    if (slot == 0) {
      std::vector<Handle> close;
      for (Handle h : carrier) {
        const double dist = a.group().distance(g, h);
        if (dist > 0.0 && dist <= delta) close.push_back(h);
      }
      if (close.empty()) continue;
      const Handle h = detail::pick(close, rng);
      detail::record(v, eps, std::abs(before - value(h, x, y)), a.group().distance(g, h),
                     "g=" + a.group().name(g) + " -> " + a.group().name(h) + " x=" + space.describe(x) +
                         " y=" + space.describe(y) + " at eps=" + detail::format_number(eps));
      continue;
    }
    const Point& p = slot == 1 ? x : y;
    const auto q = perturb(p, delta * unit(rng));
    if (!q || a.norm(*q) > m + kDefaultTolerance) continue;
    const double after = slot == 1 ? value(g, *q, y) : value(g, x, *q);
    detail::record(v, eps, std::abs(before - after), space.distance(p, *q),
                   "g=" + a.group().name(g) + " x=" + space.describe(x) + " y=" + space.describe(y) + " moved to " +
                       space.describe(*q) + " at eps=" + detail::format_number(eps));
  }
  detail::finish(v, opts.tol);
  return v;
}

// ---------------------------------------------------------------------------------------------
// Hyperbolic continuity moduli

struct HyperbolicModuliVerdict {
  int m = 0;
  int n = 0;
  double q = 0.0;
  double radius = 0.0;         // γ̃^{m,n}(q)
  std::size_t samples = 0;     // configurations drawn
  std::size_t tested = 0;      // configurations with h·p outside B_n
  bool exhaustive = false;
  bool vacuous = false;
  std::uint64_t seed = 0;
  double worst = 0.0;          // largest |length([x,y] ∩ B_n) − length([x,g·y] ∩ B_n)|
  std::string witness;
  Verdict verdict = Verdict::inconclusive;
};

/// Checks |length([x, y] ∩ B_n) − length([x, g·y] ∩ B_n)| <= q for x ∈ B_m, y = h·p with
/// p ∈ B_m and y outside B_n, and d(1, g) <= γ̃^{m,n}(q). Exhaustive over carrier and nets
/// when that is at most `samples` configurations, random otherwise.
template <GeodesicSpace S>
HyperbolicModuliVerdict verify_hyperbolic_moduli(const ActionStructure<S>& a, int m, int n, double q,
                                                 const SamplingOptions& opts = {}) {
  static_assert(!ActionStructure<S>::kHilbert, "hyperbolic moduli are a tree notion");
  if (!(q > 0.0)) throw std::invalid_argument("q must be positive");
  if (m < 1 || n <= m) throw ActionError("hyperbolic moduli need 1 <= m < n");
  const auto gamma = a.group_modulus(m, n);
  if (!gamma) throw ActionError("no modulus registered for the G-variable of " + circ_name(m, n));
  HyperbolicModuliVerdict r;
  r.m = m;
  r.n = n;
  r.q = q;
  r.seed = opts.seed;
  r.radius = gamma->delta(q);
  const auto& grp = a.group();
  const auto& carrier = grp.carrier();
  std::vector<Handle> close;
  for (Handle g : carrier) {
    if (grp.distance(grp.identity(), g) <= r.radius) close.push_back(g);
  }
  const auto pts = a.ball(m);
  if (pts.empty()) throw ActionError("empty net for the ball B_" + std::to_string(m));
  const auto& space = a.space();
  auto check = [&](Handle h, const auto& p, const auto& x, Handle g) {
    ++r.samples;
    const auto y = a.act(h, p);
    if (a.norm(y) <= n + kDefaultTolerance) return;
    ++r.tested;
    const double diff = std::abs(a.circ_unchecked(n, y, x) - a.circ_unchecked(n, a.act(g, y), x));
    if (diff > r.worst || r.witness.empty()) {
      r.worst = std::max(r.worst, diff);
      r.witness = "h=" + grp.name(h) + " p=" + space.describe(p) + " x=" + space.describe(x) + " g=" + grp.name(g);
    }
  };
  const double total = static_cast<double>(carrier.size()) * static_cast<double>(pts.size()) *
                       static_cast<double>(pts.size()) * static_cast<double>(close.size());
  if (total <= static_cast<double>(opts.samples)) {
    r.exhaustive = true;
    for (Handle h : carrier)
      for (const auto& p : pts)
        for (const auto& x : pts)
          for (Handle g : close) check(h, p, x, g);
  } else {
    std::mt19937_64 rng(opts.seed);
    for (std::size_t i = 0; i < opts.samples; ++i) {
      const Handle h = detail::pick(carrier, rng);
      const auto& p = detail::pick(pts, rng);
      const auto& x = detail::pick(pts, rng);
      check(h, p, x, detail::pick(close, rng));
    }
  }
  if (r.tested == 0) {
    r.vacuous = true;
    r.verdict = Verdict::inconclusive;
    r.witness = "no sampled h·p lies outside B_" + std::to_string(n);
    return r;
  }
  r.verdict = r.worst <= q + opts.tol ? Verdict::holds : Verdict::fails;
  return r;
}

// ---------------------------------------------------------------------------------------------
// Displacement

struct DisplacementRow {
  std::string point;
  double min_displacement = 0.0;  // over g != 1
  Handle argmin = 0;
  double max_displacement = 0.0;
  Handle argmax = 0;
};

struct DisplacementProfile {
  int m = 0;
  std::vector<DisplacementRow> rows;
  double sup_inf = 0.0;  // sup_v inf_{g != 1} d(g·v, v)
  double inf_sup = 0.0;  // inf_{g != 1} sup_v d(g·v, v)
  double moved = 0.0;    // inf_v sup_g d(g·v, v): every point is moved this far by some g
  std::optional<int> certified_s;  // least s with 1/s <= moved
};

/// Exact displacement table over the net of B_m and the carrier without the identity.
template <GeodesicSpace S>
DisplacementProfile displacement_profile(const ActionStructure<S>& a, int m) {
  const auto pts = a.ball(m);
  if (pts.empty()) throw ActionError("empty net for the ball B_" + std::to_string(m));
  const auto& grp = a.group();
  std::vector<Handle> movers;
  for (Handle g : grp.carrier()) {
    if (g != grp.identity()) movers.push_back(g);
  }
  DisplacementProfile p;
  p.m = m;
  if (movers.empty()) {
    for (const auto& v : pts) p.rows.push_back({a.space().describe(v), 0.0, grp.identity(), 0.0, grp.identity()});
    return p;
  }
  std::vector<double> column_sup(movers.size(), 0.0);
  p.sup_inf = 0.0;
  p.moved = std::numeric_limits<double>::infinity();
  for (const auto& v : pts) {
    DisplacementRow row;
    row.point = a.space().describe(v);
    row.min_displacement = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < movers.size(); ++i) {
      const double d = a.space().distance(a.act(movers[i], v), v);
      column_sup[i] = std::max(column_sup[i], d);
      if (d < row.min_displacement) {
        row.min_displacement = d;
        row.argmin = movers[i];
      }
      if (d > row.max_displacement) {
        row.max_displacement = d;
        row.argmax = movers[i];
      }
    }
    p.sup_inf = std::max(p.sup_inf, row.min_displacement);
    p.moved = std::min(p.moved, row.max_displacement);
    p.rows.push_back(std::move(row));
  }
  p.inf_sup = *std::min_element(column_sup.begin(), column_sup.end());
  if (p.sup_inf > p.inf_sup + kDefaultTolerance) throw std::logic_error("minimax inequality violated");
  if (p.moved > kDefaultTolerance) p.certified_s = static_cast<int>(std::ceil(1.0 / p.moved - 1e-12));
  return p;
}

// ---------------------------------------------------------------------------------------------
// Fixed points and hyperbolic elements

struct NonFRCertificate {
  enum class Kind { hyperbolic, fixed_point, inconclusive } kind = Kind::inconclusive;
  Handle element = 0;       // hyperbolic element
  double length = 0.0;      // its translation length
  std::string point;        // fixed point, or a point on the axis
  std::string explanation;
};

inline std::string to_string(NonFRCertificate::Kind k) {
  switch (k) {
    case NonFRCertificate::Kind::hyperbolic: return "hyperbolic";
    case NonFRCertificate::Kind::fixed_point: return "fixed_point";
    case NonFRCertificate::Kind::inconclusive: return "inconclusive";
  }
  return "inconclusive";
}

/// A hyperbolic carrier element (shortest translation length, first in carrier order), else a
/// common fixed point of the carrier, else inconclusive.
template <GeodesicSpace S>
NonFRCertificate find_nonFR_witness(const ActionStructure<S>& a, double tol = kDefaultTolerance) {
  static_assert(!ActionStructure<S>::kHilbert, "the witness search works on trees");
  NonFRCertificate c;
  const auto& grp = a.group();
  const auto& space = a.space();
  std::optional<std::pair<Handle, IsometryClassification<typename S::Point>>> best;
  std::vector<typename S::Isometry> isos;
  for (Handle g : grp.carrier()) {
    const auto iso = a.isometry(g);
    isos.push_back(iso);
    const auto k = classify_isometry(space, iso, tol);
    if (k.hyperbolic() && (!best || k.length < best->second.length - tol)) best = {g, k};
  }
  if (best) {
    c.kind = NonFRCertificate::Kind::hyperbolic;
    c.element = best->first;
    c.length = best->second.length;
    c.point = space.describe(best->second.point);
    c.explanation = "element " + grp.name(best->first) + " is hyperbolic with translation length " + detail::format_number(c.length);
    return c;
  }
  const auto fp = group_fixed_point(space, isos, tol);
  using Cert = typename decltype(fp)::Certificate;
  if (fp.certificate == Cert::fixed_point) {
    c.kind = NonFRCertificate::Kind::fixed_point;
    c.point = space.describe(*fp.point);
    c.explanation = "every carrier element fixes " + c.point;
    return c;
  }
  if (fp.certificate == Cert::hyperbolic_product) {
    const auto& gs = grp.carrier();
    c.explanation = "elements " + grp.name(gs[fp.first]) + " and " + grp.name(gs[fp.second]) +
                    " have no common fixed point; their product is hyperbolic but lies outside the carrier";
    return c;
  }
  c.explanation = "no hyperbolic element and no common fixed point found: " + fp.explanation;
  return c;
}

// ---------------------------------------------------------------------------------------------
// Substructure extraction

struct FormulaGap {
  std::string formula;
  Bracket full;
  Bracket sub;
  double gap = 0.0;   // largest distance between a value in `full` and one in `sub`
  int binders = 0;
};

struct SubstructureResult {
  std::map<std::string, std::vector<Handle>> seed;
  std::map<std::string, std::vector<Handle>> selection;
  std::vector<FormulaGap> gaps;
  int rounds = 0;
  double eps = 0.0;
  Structure restricted(const Structure& s) const;
};

namespace detail {

struct BinderSite {
  const Formula* node;
  std::map<std::string, std::string> free_sorts;  // free variables of the binder subformula
};

inline void binder_sites(const Formula& fm, std::map<std::string, std::string>& scope, std::vector<BinderSite>& out) {
  if (fm.kind == Formula::Kind::binder) {
    BinderSite site{&fm, {}};
    for (const auto& v : free_variable_names(fm)) {
      auto it = scope.find(v);
      if (it == scope.end()) throw EvalError("fragment formula has free variable '" + v + "'");
      site.free_sorts[v] = it->second;
    }
    out.push_back(std::move(site));
    auto saved = scope.find(fm.var) != scope.end() ? std::optional<std::string>(scope[fm.var]) : std::nullopt;
    scope[fm.var] = fm.sort;
    binder_sites(fm.children[0], scope, out);
    if (saved) scope[fm.var] = *saved; else scope.erase(fm.var);
    return;
  }
  for (const auto& c : fm.children) binder_sites(c, scope, out);
}

class Selection {
 public:
  explicit Selection(const Structure& s) : s_(s) {}

  bool add(const std::string& sort, Handle h) {
    const SortData& sd = s_.sort(sort);
    if (std::find(sd.net.begin(), sd.net.end(), h) == sd.net.end()) return false;
    return sets_[sort].insert(h).second;
  }

  /// Group identity, inverses and products inside the carrier; basepoints; ball inclusions.
  void close() {
    bool changed = true;
    while (changed) {
      changed = false;
      for (std::size_t i = 0; i < s_.sort_count(); ++i) {
        const SortData& sd = s_.sort(static_cast<int>(i));
        const std::string& name = sd.decl.name;
        if (sd.decl.kind == SortKind::group && s_.has_group()) {
          if (sets_[name].empty()) continue;
          const auto& ops = s_.group();
          changed |= add(name, ops.identity());
          const std::vector<Handle> cur(sets_[name].begin(), sets_[name].end());
          for (Handle a : cur) {
            changed |= add(name, ops.inv(a));
            for (Handle b : cur) {
              if (auto p = ops.try_mul(a, b)) changed |= add(name, *p);
            }
          }
        } else if (sd.decl.kind == SortKind::ball) {
          if (!sets_[name].empty()) changed |= add(name, sd.basepoint);
          for (std::size_t j = 0; j < s_.sort_count(); ++j) {
            const SortData& big = s_.sort(static_cast<int>(j));
            if (big.decl.kind != SortKind::ball || big.decl.ball_index <= sd.decl.ball_index) continue;
            const std::vector<Handle> cur(sets_[name].begin(), sets_[name].end());
            for (Handle h : cur) changed |= add(big.decl.name, h);
          }
        }
      }
    }
  }

  std::vector<Handle> ordered(const std::string& sort) const {
    std::vector<Handle> out;
    auto it = sets_.find(sort);
    if (it == sets_.end()) return out;
    for (Handle h : s_.sort(sort).net) {
      if (it->second.contains(h)) out.push_back(h);
    }
    return out;
  }

  std::map<std::string, std::vector<Handle>> all() const {
    std::map<std::string, std::vector<Handle>> out;
    for (const auto& [name, set] : sets_) {
      if (!set.empty()) out[name] = ordered(name);
    }
    return out;
  }

 private:
  const Structure& s_;
  std::map<std::string, std::set<Handle>> sets_;
};

}  // namespace detail

inline Structure SubstructureResult::restricted(const Structure& s) const { return s.restricted(selection); }

/// Approximate Tarski–Vaught closure: for every sup/inf subformula of the fragment and every
/// assignment of its free variables in the current selection, adds the first net point (in
/// net order) whose body value is within ε of the optimum over the full net, then closes under
/// the operations. Repeats until nothing changes.
inline SubstructureResult extract_substructure(const Structure& s, const std::vector<Formula>& fragment,
                                               const std::map<std::string, std::vector<Handle>>& seed, double eps) {
  if (!(eps >= 0.0)) throw std::invalid_argument("eps must be non-negative");
  SubstructureResult r;
  r.seed = seed;
  r.eps = eps;
  detail::Selection sel(s);
  for (const auto& [sort, pts] : seed) {
    const auto& net = s.sort(sort).net;
    for (Handle h : pts) {
      if (std::find(net.begin(), net.end(), h) == net.end()) {
        throw std::invalid_argument("seed point " + std::to_string(h) + " is not in the net of sort '" + sort + "'");
      }
      sel.add(sort, h);
    }
  }
  sel.close();
  std::vector<detail::BinderSite> sites;
  for (const auto& fm : fragment) {
    if (!is_closed(fm)) throw EvalError("fragment formulas must be closed");
    std::map<std::string, std::string> scope;
    detail::binder_sites(fm, scope, sites);
  }
  struct Compiled {
    detail::BinderSite site;
    std::unique_ptr<Evaluator> body;
  };
  std::vector<Compiled> compiled;
  for (const auto& site : sites) {
    auto sorts = site.free_sorts;
    sorts[site.node->var] = site.node->sort;
    compiled.push_back({site, std::make_unique<Evaluator>(s, site.node->children[0], sorts)});
  }
  bool changed = true;
  while (changed) {
    changed = false;
    ++r.rounds;
    for (auto& [site, body] : compiled) {
      const Formula& b = *site.node;
      const bool sup = b.quantifier == Quantifier::sup;
      const auto& vars = body->free_vars();
      std::vector<std::vector<Handle>> domains;
      std::size_t bound = 0;
      bool empty = false;
      for (std::size_t i = 0; i < vars.size(); ++i) {
        if (vars[i].first == b.var) {
          bound = i;
          domains.push_back({});
          continue;
        }
        domains.push_back(sel.ordered(vars[i].second));
        if (domains.back().empty()) empty = true;
      }
      if (empty) continue;
      const auto& net = s.sort(b.sort).net;
      std::vector<std::size_t> idx(vars.size(), 0);
      std::vector<Handle> env(vars.size());
      std::vector<Bracket> vals(net.size());
      while (true) {
        for (std::size_t i = 0; i < vars.size(); ++i) {
          if (i != bound) env[i] = domains[i][idx[i]];
        }
        double best = sup ? -std::numeric_limits<double>::infinity() : std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < net.size(); ++k) {
          env[bound] = net[k];
          vals[k] = body->eval_slots(env);
          best = sup ? std::max(best, vals[k].lo) : std::min(best, vals[k].hi);
        }
        for (std::size_t k = 0; k < net.size(); ++k) {
          if (sup ? vals[k].lo >= best - eps : vals[k].hi <= best + eps) {
            changed |= sel.add(b.sort, net[k]);
            break;
          }
        }
        std::size_t i = 0;
        for (; i < vars.size(); ++i) {
          if (i == bound) continue;
          if (++idx[i] < domains[i].size()) break;
          idx[i] = 0;
        }
        if (i == vars.size()) break;
      }
    }
    if (changed) sel.close();
  }
  r.selection = sel.all();
  const Structure sub = r.restricted(s);
  for (const auto& fm : fragment) {
    FormulaGap g;
    g.formula = format_formula(fm);
    g.binders = binder_count(fm);
    g.full = eval_bracket(fm, s);
    g.sub = eval_bracket(fm, sub);
    g.gap = std::max({g.sub.hi - g.full.lo, g.full.hi - g.sub.lo, 0.0});
    r.gaps.push_back(std::move(g));
  }
  return r;
}

}  // namespace contlog
