#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <limits>
#include <stdexcept>
#include <type_traits>
#include <string>
#include <utility>
#include <vector>

#include "contlog/bracket.hpp"
#include "contlog/structure.hpp"

namespace contlog {

/// Metric group with a finite carrier used as the evaluation net of the group sort.
class MetricGroup {
 public:
  enum class Backend { finite, integers, words };

  /// Finite table backend. `mul[a*n+b]` may be -1 for products outside a partial table.
  static MetricGroup finite(std::vector<std::string> names, std::vector<Handle> mul, std::vector<Handle> inv,
                            Handle identity, std::vector<double> metric) {
    const auto n = static_cast<std::int64_t>(names.size());
    if (n == 0) throw std::invalid_argument("empty group carrier");
    if (static_cast<std::int64_t>(metric.size()) != n * n) throw std::invalid_argument("metric matrix has the wrong size");
    MetricGroup g;
    g.backend_ = Backend::finite;
    g.ops_ = GroupOps::table(n, std::move(mul), std::move(inv), identity);
    g.names_ = std::move(names);
    for (std::int64_t i = 0; i < n; ++i) g.carrier_.push_back(i);
    g.diameter_ = std::max(1e-300, *std::max_element(metric.begin(), metric.end()));
    g.metric_ = [m = std::move(metric), n](Handle a, Handle b) {
      if (a < 0 || b < 0 || a >= n || b >= n) throw EvalError("group handle outside the carrier table");
      return m[static_cast<std::size_t>(a * n + b)];
    };
    return g;
  }

  /// {0,1}-valued metric matrix of size n.
  static std::vector<double> discrete_metric(std::size_t n) {
    std::vector<double> m(n * n, 1.0);
    for (std::size_t i = 0; i < n; ++i) m[i * n + i] = 0.0;
    return m;
  }

  /// Cyclic group C_n with the discrete metric.
  static MetricGroup cyclic(int n) {
    std::vector<std::string> names;
    std::vector<Handle> mul, inv;
    for (int a = 0; a < n; ++a) {
      names.push_back(std::to_string(a));
      inv.push_back((n - a) % n);
      for (int b = 0; b < n; ++b) mul.push_back((a + b) % n);
    }
    return finite(std::move(names), std::move(mul), std::move(inv), 0, discrete_metric(static_cast<std::size_t>(n)));
  }

  /// ℤ with carrier [lo, hi] and metric min(cap, scale·|x−y|). Products are computed in ℤ.
  static MetricGroup integers(std::int64_t lo, std::int64_t hi, double scale = 1.0, double cap = 1.0) {
    if (lo > 0 || hi < 0) throw std::invalid_argument("integer carrier must contain 0");
    MetricGroup g;
    g.backend_ = Backend::integers;
    g.ops_ = GroupOps::integers();
    for (std::int64_t i = lo; i <= hi; ++i) g.carrier_.push_back(i);
    g.diameter_ = cap;
    g.metric_ = [scale, cap](Handle a, Handle b) {
      return std::min(cap, scale * static_cast<double>(a > b ? a - b : b - a));
    };
    return g;
  }

  /// ℤ with an arbitrary metric function (used to build deliberately broken groups).
  static MetricGroup integers_with_metric(std::int64_t lo, std::int64_t hi, MetricFn metric, double diameter) {
    MetricGroup g = integers(lo, hi);
    g.metric_ = std::move(metric);
    g.diameter_ = diameter;
    return g;
  }

  /// Group generated by `gens` under `compose`, enumerated by breadth-first search up to
  /// word length `product_cap`. The carrier is the set of elements of length <= `cap`.
  /// `same` decides equality of elements. Metric: d(a,b) for table indices; defaults to discrete.
  template <class Elem, class Compose, class Inverse, class Same>
  static MetricGroup words(const Elem& identity, const std::vector<Elem>& gens, Compose compose, Inverse inverse,
                           Same same, int cap, int product_cap, std::type_identity_t<std::vector<Elem>>* elements_out = nullptr,
                           std::type_identity_t<std::function<double(const Elem&, const Elem&)>> metric = {}) {
    if (cap < 0 || product_cap < cap) throw std::invalid_argument("word caps must satisfy 0 <= cap <= product_cap");
    std::vector<Elem> elems{identity};
    std::vector<int> length{0};
    std::vector<Elem> letters = gens;
    for (const auto& g : gens) letters.push_back(inverse(g));
    auto find = [&](const Elem& e) -> Handle {
      for (std::size_t i = 0; i < elems.size(); ++i) if (same(elems[i], e)) return static_cast<Handle>(i);
      return -1;
    };
    std::size_t frontier = 0;
    for (int len = 1; len <= product_cap; ++len) {
      const std::size_t end = elems.size();
      for (std::size_t i = frontier; i < end; ++i) {
        for (const auto& l : letters) {
          Elem e = compose(elems[i], l);
          if (find(e) < 0) {
            elems.push_back(std::move(e));
            length.push_back(len);
          }
        }
      }
      frontier = end;
    }
    const auto n = static_cast<std::int64_t>(elems.size());
    std::vector<Handle> mul(static_cast<std::size_t>(n * n), -1), inv(static_cast<std::size_t>(n), -1);
    for (std::int64_t a = 0; a < n; ++a) {
      inv[static_cast<std::size_t>(a)] = find(inverse(elems[static_cast<std::size_t>(a)]));
      for (std::int64_t b = 0; b < n; ++b) {
        mul[static_cast<std::size_t>(a * n + b)] = find(compose(elems[static_cast<std::size_t>(a)], elems[static_cast<std::size_t>(b)]));
      }
    }
    std::vector<double> dm(static_cast<std::size_t>(n * n));
    for (std::int64_t a = 0; a < n; ++a) {
      for (std::int64_t b = 0; b < n; ++b) {
        dm[static_cast<std::size_t>(a * n + b)] =
            metric ? metric(elems[static_cast<std::size_t>(a)], elems[static_cast<std::size_t>(b)]) : (a == b ? 0.0 : 1.0);
      }
    }
    std::vector<std::string> names;
    for (std::int64_t i = 0; i < n; ++i) names.push_back("w" + std::to_string(i));
    MetricGroup g = finite(std::move(names), std::move(mul), std::move(inv), 0, std::move(dm));
    g.backend_ = Backend::words;
    g.carrier_.clear();
    for (std::int64_t i = 0; i < n; ++i) if (length[static_cast<std::size_t>(i)] <= cap) g.carrier_.push_back(i);
    g.word_length_ = std::move(length);
    if (elements_out) *elements_out = std::move(elems);
    return g;
  }

  Backend backend() const { return backend_; }
  const GroupOps& ops() const { return ops_; }
  const std::vector<Handle>& carrier() const { return carrier_; }
  Handle identity() const { return ops_.identity(); }
  double diameter() const { return diameter_; }
  double distance(Handle a, Handle b) const { return metric_(a, b); }
  const MetricFn& metric() const { return metric_; }
  Handle mul(Handle a, Handle b) const { return ops_.mul(a, b); }
  std::optional<Handle> try_mul(Handle a, Handle b) const { return ops_.try_mul(a, b); }
  Handle inv(Handle a) const { return ops_.inv(a); }

  bool in_carrier(Handle h) const { return std::find(carrier_.begin(), carrier_.end(), h) != carrier_.end(); }

  /// Word length of a handle for the word backend (0 otherwise).
  int word_length(Handle h) const {
    if (backend_ != Backend::words) return 0;
    return word_length_.at(static_cast<std::size_t>(h));
  }

  std::string name(Handle h) const {
    if (backend_ == Backend::integers) return std::to_string(h);
    return names_.at(static_cast<std::size_t>(h));
  }

  std::optional<Handle> find_name(const std::string& s) const {
    if (backend_ == Backend::integers) {
      try {
        std::size_t pos = 0;
        const long long v = std::stoll(s, &pos);
        if (pos == s.size()) return static_cast<Handle>(v);
      } catch (const std::exception&) {
      }
      return std::nullopt;
    }
    for (std::size_t i = 0; i < names_.size(); ++i) if (names_[i] == s) return static_cast<Handle>(i);
    return std::nullopt;
  }

  void set_names(std::vector<std::string> names) {
    if (backend_ == Backend::integers) throw std::logic_error("integer elements are named by their value");
    names_ = std::move(names);
  }

  /// Restricts the carrier (the evaluation net) to a subset.
  void set_carrier(std::vector<Handle> c) {
    if (c.empty()) throw std::invalid_argument("empty group carrier");
    carrier_ = std::move(c);
  }

 private:
  Backend backend_ = Backend::finite;
  GroupOps ops_ = GroupOps::integers();
  std::vector<Handle> carrier_;
  std::vector<std::string> names_;
  std::vector<int> word_length_;
  MetricFn metric_;
  double diameter_ = 1.0;
};

struct Violation {
  std::string axiom;
  std::string witness;
  double excess = 0.0;
};

struct GroupReport {
  std::vector<Violation> violations;
  bool ok() const { return violations.empty(); }
  bool mentions(const std::string& axiom) const {
    return std::any_of(violations.begin(), violations.end(), [&](const Violation& v) { return v.axiom == axiom; });
  }
};

namespace detail {

inline std::string tuple_string(const MetricGroup& g, std::initializer_list<Handle> hs) {
  std::string s = "(";
  bool first = true;
  for (Handle h : hs) {
    if (!first) s += ", ";
    s += g.name(h);
    first = false;
  }
  return s + ")";
}

// Records the first few violations per axiom so reports stay readable.
class Recorder {
 public:
  explicit Recorder(GroupReport& r, std::size_t per_axiom = 5) : r_(r), limit_(per_axiom) {}
  void add(const std::string& axiom, std::string witness, double excess) {
    if (counts_[axiom]++ < limit_) r_.violations.push_back({axiom, std::move(witness), excess});
  }

 private:
  GroupReport& r_;
  std::size_t limit_;
  std::map<std::string, std::size_t> counts_;
};

}  // namespace detail

/// Left invariance d(gx, gy) = d(x, y) on the carrier (products outside a partial table skipped).
inline GroupReport check_left_invariance(const MetricGroup& g, double tol = kDefaultTolerance) {
  GroupReport r;
  detail::Recorder rec(r);
  const auto& c = g.carrier();
  for (Handle a : c) for (Handle x : c) for (Handle y : c) {
    auto ax = g.try_mul(a, x), ay = g.try_mul(a, y);
    if (!ax || !ay) continue;
    const double e = std::abs(g.distance(*ax, *ay) - g.distance(x, y));
    if (e > tol) rec.add("left-invariance", detail::tuple_string(g, {a, x, y}), e);
  }
  return r;
}

inline GroupReport check_right_invariance(const MetricGroup& g, double tol = kDefaultTolerance) {
  GroupReport r;
  detail::Recorder rec(r);
  const auto& c = g.carrier();
  for (Handle a : c) for (Handle x : c) for (Handle y : c) {
    auto xa = g.try_mul(x, a), ya = g.try_mul(y, a);
    if (!xa || !ya) continue;
    const double e = std::abs(g.distance(*xa, *ya) - g.distance(x, y));
    if (e > tol) rec.add("right-invariance", detail::tuple_string(g, {a, x, y}), e);
  }
  return r;
}

/// Conjugation invariance d(axa⁻¹, aya⁻¹) = d(x, y).
inline GroupReport check_conjugation_invariance(const MetricGroup& g, double tol = kDefaultTolerance) {
  GroupReport r;
  detail::Recorder rec(r);
  const auto& c = g.carrier();
  for (Handle a : c) {
    const Handle ai = g.inv(a);
    for (Handle x : c) for (Handle y : c) {
      auto ax = g.try_mul(a, x), ay = g.try_mul(a, y);
      if (!ax || !ay || (ai < 0 && g.backend() != MetricGroup::Backend::integers)) continue;
      auto cx = g.try_mul(*ax, ai), cy = g.try_mul(*ay, ai);
      if (!cx || !cy) continue;
      const double e = std::abs(g.distance(*cx, *cy) - g.distance(x, y));
      if (e > tol) rec.add("conjugation-invariance", detail::tuple_string(g, {a, x, y}), e);
    }
  }
  return r;
}

/// Metric axioms, bi-invariance and group laws on the carrier, within `tol`.
inline GroupReport validate_group(const MetricGroup& g, double tol = kDefaultTolerance) {
  GroupReport r;
  detail::Recorder rec(r);
  const auto& c = g.carrier();
  const Handle e = g.identity();
  for (Handle x : c) {
    if (std::abs(g.distance(x, x)) > tol) rec.add("identity", detail::tuple_string(g, {x}), std::abs(g.distance(x, x)));
    auto ex = g.try_mul(e, x), xe = g.try_mul(x, e);
    if (!ex || *ex != x || !xe || *xe != x) rec.add("neutral element", detail::tuple_string(g, {x}), 0.0);
    const Handle xi = g.inv(x);
    const bool has_inv = g.backend() == MetricGroup::Backend::integers || xi >= 0;
    auto p = has_inv ? g.try_mul(x, xi) : std::nullopt;
    if (!p || *p != e) rec.add("inverse", detail::tuple_string(g, {x}), 0.0);
    for (Handle y : c) {
      const double dxy = g.distance(x, y);
      if (!std::isfinite(dxy) || dxy < -tol) rec.add("non-negativity", detail::tuple_string(g, {x, y}), -dxy);
      if (x != y && dxy <= tol) rec.add("separation", detail::tuple_string(g, {x, y}), tol - dxy);
      if (dxy > g.diameter() + tol) rec.add("diameter bound", detail::tuple_string(g, {x, y}), dxy - g.diameter());
      const double sym = std::abs(dxy - g.distance(y, x));
      if (sym > tol) rec.add("symmetry", detail::tuple_string(g, {x, y}), sym);
      for (Handle z : c) {
        const double tri = dxy - g.distance(x, z) - g.distance(z, y);
        if (tri > tol) rec.add("triangle", detail::tuple_string(g, {x, y, z}), tri);
        auto xy = g.try_mul(x, y), yz = g.try_mul(y, z);
        if (xy && yz) {
          auto l = g.try_mul(*xy, z), rr = g.try_mul(x, *yz);
          if (l && rr && *l != *rr) rec.add("associativity", detail::tuple_string(g, {x, y, z}), 0.0);
        }
      }
    }
  }
  for (auto* part : {&check_left_invariance, &check_right_invariance}) {
    GroupReport sub = (*part)(g, tol);
    r.violations.insert(r.violations.end(), sub.violations.begin(), sub.violations.end());
  }
  return r;
}

/// K_δ = { g in the carrier : d(1, g) <= δ }.
inline std::vector<Handle> delta_ball(const MetricGroup& g, double delta) {
  if (!(delta >= 0.0 && delta < 1.0)) throw std::invalid_argument("delta must lie in [0, 1)");
  std::vector<Handle> out;
  for (Handle h : g.carrier()) {
    if (g.distance(g.identity(), h) <= delta) out.push_back(h);
  }
  return out;
}

/// Metric group with two [0,1]-valued grey predicates.
struct GreyGroup {
  MetricGroup group;
  std::function<double(Handle)> P;
  std::function<double(Handle)> Q;
};

/// Grey predicates from a finite set V: P = scale·d(x, G∖V), Q = scale·d(x, V), capped at
/// scale·diameter.
inline GreyGroup grey_from_set(MetricGroup g, const std::vector<Handle>& V, double scale = 0.5) {
  std::vector<Handle> vset = V;
  std::sort(vset.begin(), vset.end());
  auto member = [vset](Handle x) { return std::binary_search(vset.begin(), vset.end(), x); };
  GreyGroup out{std::move(g), {}, {}};
  const double diam = out.group.diameter();
  // For the integer backend the complement is infinite, so distances are taken over V and
  // the integers adjacent to V, which realize the infimum for a translation-invariant metric.
  std::vector<Handle> complement_probe;
  for (Handle v : vset) {
    for (Handle d : {v - 1, v + 1}) {
      if (!member(d)) complement_probe.push_back(d);
    }
  }
  if (out.group.backend() != MetricGroup::Backend::integers) {
    complement_probe.clear();
    for (Handle h : out.group.carrier()) if (!member(h)) complement_probe.push_back(h);
  }
  const MetricFn metric = out.group.metric();
  out.P = [member, complement_probe, metric, scale, diam](Handle x) {
    if (!member(x)) return 0.0;
    double best = diam;
    for (Handle y : complement_probe) best = std::min(best, metric(x, y));
    return scale * best;
  };
  out.Q = [member, vset, metric, scale, diam](Handle x) {
    if (member(x)) return 0.0;
    double best = diam;
    for (Handle y : vset) best = std::min(best, metric(x, y));
    return scale * best;
  };
  return out;
}

/// |P(x) − P(y)| <= d(x, y) and the same for Q on all carrier pairs.
inline GroupReport check_grey_lipschitz(const GreyGroup& gg, double tol = kDefaultTolerance) {
  GroupReport r;
  detail::Recorder rec(r);
  const auto& g = gg.group;
  for (Handle x : g.carrier()) {
    for (Handle y : g.carrier()) {
      const double d = g.distance(x, y);
      const double ep = std::abs(gg.P(x) - gg.P(y)) - d;
      if (ep > tol) rec.add("P Lipschitz", detail::tuple_string(g, {x, y}), ep);
      const double eq = std::abs(gg.Q(x) - gg.Q(y)) - d;
      if (eq > tol) rec.add("Q Lipschitz", detail::tuple_string(g, {x, y}), eq);
    }
  }
  return r;
}

/// Adds the group sort "G" of `g` to a structure and installs the group operations.
inline void add_group_sort(Structure& s, const MetricGroup& g, const std::string& name = "G", double mesh = 0.0) {
  s.set_group(g.ops());
  MetricGroup copy = g;
  SortData sd{{name, SortKind::group, 0, g.diameter()}, g.metric(), g.carrier(), mesh, g.identity(),
              [copy](Handle h) { return copy.name(h); }};
  s.add_sort(std::move(sd));
}

/// Structure with the group sort and the grey predicates P, Q (modulus id on each).
inline Structure grey_structure(const GreyGroup& gg) {
  Structure s;
  add_group_sort(s, gg.group);
  auto P = gg.P;
  auto Q = gg.Q;
  s.add_predicate({{"P", {"G"}, {0.0, 1.0}}, [P](std::span<const Handle> a) { return P(a[0]); }, {}});
  s.add_predicate({{"Q", {"G"}, {0.0, 1.0}}, [Q](std::span<const Handle> a) { return Q(a[0]); }, {}});
  s.register_modulus("P", 0, Modulus::identity());
  s.register_modulus("Q", 0, Modulus::identity());
  return s;
}

}  // namespace contlog
