#pragma once

#include <chrono>
#include <cmath>
#include <functional>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "contlog/action.hpp"
#include "contlog/evaluator.hpp"
#include "contlog/formula.hpp"
#include "contlog/parser.hpp"
#include "contlog/structure.hpp"

namespace contlog {

class SchemeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class SchemeId { kdelta, isoR, isoH, theta_tree, theta_hilbert, grey, theta_grey, compactness };

inline std::string_view to_string(SchemeId id) {
  switch (id) {
    case SchemeId::kdelta: return "Kdelta";
    case SchemeId::isoR: return "isoR";
    case SchemeId::isoH: return "isoH";
    case SchemeId::theta_tree: return "ThetaTree";
    case SchemeId::theta_hilbert: return "ThetaHilbert";
    case SchemeId::grey: return "Grey";
    case SchemeId::theta_grey: return "ThetaGrey";
    case SchemeId::compactness: return "Compactness";
  }
  return "?";
}

inline std::optional<SchemeId> scheme_from_string(std::string_view s) {
  for (SchemeId id : {SchemeId::kdelta, SchemeId::isoR, SchemeId::isoH, SchemeId::theta_tree, SchemeId::theta_hilbert,
                      SchemeId::grey, SchemeId::theta_grey, SchemeId::compactness}) {
    if (to_string(id) == s) return id;
  }
  return std::nullopt;
}

/// Index bounds and rational grids selecting a finite slice of an axiom scheme.
struct SchemeParams {
  SchemeId id = SchemeId::isoR;
  int m_max = 1;
  int n_max = 1;
  int k_max = 1;
  std::vector<double> deltas{0.5};
  std::vector<double> eps{0.5};
  int s = 1;                    // constant s, used when s_of_m is empty
  std::function<int(int)> s_of_m;
  GthFn gth;                    // isoR, isoH
  OrtFn ort;                    // isoH, ThetaHilbert
  std::string compact_sort = "K";
  std::size_t word_cap = 256;   // |W_{m,k}| = m^k
  int tuple_cap = 8;            // compactness tuple arity

  int s_at(int m) const { return s_of_m ? s_of_m(m) : s; }
};

/// One generated axiom: family name, index values and the closed condition.
struct AxiomInstance {
  std::string axiom;
  std::vector<std::pair<std::string, double>> indices;
  Condition condition;

  std::string index_string() const {
    std::ostringstream os;
    for (std::size_t i = 0; i < indices.size(); ++i) {
      if (i) os << ' ';
      os << indices[i].first << '=' << detail::format_number(indices[i].second);
    }
    return os.str();
  }
};

namespace detail {

inline Term tv(const std::string& v) { return Term::var(v); }

inline Formula num(double v) { return f::constant(v); }

inline Formula circ(int m, int n, Term g, Term x, Term y) {
  return f::atom(circ_name(m, n), {std::move(g), std::move(x), std::move(y)});
}

/// m ∸ ∘_mn(g, x, 0): positive exactly when g·x lies inside B_m.
inline Formula inside(int m, int n, Term g, Term x) {
  return f::tminus(num(m), circ(m, n, std::move(g), std::move(x), Term::zero()));
}

inline Formula min_or_single(std::vector<Formula> xs) { return xs.size() == 1 ? std::move(xs.front()) : f::min(std::move(xs)); }
inline Formula max_or_single(std::vector<Formula> xs) { return xs.size() == 1 ? std::move(xs.front()) : f::max(std::move(xs)); }

inline std::vector<std::string> numbered(const std::string& stem, int k) {
  std::vector<std::string> out;
  for (int i = 1; i <= k; ++i) out.push_back(stem + std::to_string(i));
  return out;
}

inline void require(bool ok, const std::string& msg) {
  if (!ok) throw SchemeError(msg);
}

inline int gth_at(const GthFn& gth, int m, double delta) {
  try {
    return gth(m, delta);
  } catch (const std::exception& e) {
    throw SchemeError("gth table has no entry for m=" + std::to_string(m) + " delta=" + detail::format_number(delta) + ": " +
                      e.what());
  }
}

}  // namespace detail

/// Axioms of the ternary predicates ∘_mn for isometric actions on pointed real trees (or, with
/// `pair_ok` = ort(m) < n, on Hilbert spaces). Every legal index tuple within the bounds gives
/// one instance; δ ranges over the grid.
inline std::vector<AxiomInstance> gen_action_axioms(const SchemeParams& p, const std::function<bool(int, int)>& pair_ok) {
  using namespace detail;
  using f::tminus, f::tplus, f::absdiff;
  require(p.m_max >= 1 && p.n_max >= 1, "index bounds must be at least 1");
  require(!p.deltas.empty(), "delta grid is empty");
  for (double d : p.deltas) require(d >= 0.0 && d < 1.0, "delta must lie in [0, 1)");
  require(static_cast<bool>(p.gth), "gth table missing");
  const Term g = tv("g"), h = tv("h"), x = tv("x"), y = tv("y");
  std::vector<AxiomInstance> out;
  auto emit = [&](std::string name, std::vector<std::pair<std::string, double>> idx, Formula fm) {
    out.push_back({std::move(name), std::move(idx), Condition::zero(std::move(fm))});
  };
  auto ball = [](int m) { return ball_sort_name(m); };
  const int N = p.n_max;

  for (double delta : p.deltas) {
    const Formula near = tminus(num(delta), f::d(Term::one(), g));
    for (int m = 1; m <= p.m_max; ++m) {
      const int gm = gth_at(p.gth, m, delta);
      for (int n = std::max(gm, 1); n <= N; ++n) {
        for (int s = n + 1; s <= N; ++s) {
          if (!pair_ok(m, s)) continue;
          emit("1(a)", {{"m", m}, {"n", n}, {"s", s}, {"delta", delta}},
               f::sup("g", "G", f::sup("x", ball(m), f::min({tminus(circ(m, s, g, x, Term::zero()), num(n)), near}))));
        }
      }
      for (int m2 = m + 1; m2 <= p.m_max; ++m2) {
        const int gm2 = gth_at(p.gth, m2, delta);
        for (int t = 1; t <= N; ++t) {
          if (t <= gm2) continue;
          for (int s = gm + 1; s < t; ++s) {
            if (!pair_ok(m, s) || !pair_ok(m2, t)) continue;
            const Formula diff =
                absdiff(circ(m, s, g, x, y), circ(m2, t, g, Term::include(m, m2, x), Term::include(m, m2, y)));
            emit("1(b)", {{"m", m}, {"m'", m2}, {"s", s}, {"t", t}, {"delta", delta}},
                 f::sup("g", "G", f::sups({"x", "y"}, ball(m), f::min({diff, near}))));
          }
        }
      }
    }
  }

  for (int m = 1; m <= p.m_max; ++m) {
    for (int n = m; n <= N; ++n) {
      if (!pair_ok(m, n)) continue;
      const std::string B = ball(m);
      const std::vector<std::pair<std::string, double>> idx{{"m", m}, {"n", n}};
      auto C = [&](Term a, Term b, Term c) { return circ(m, n, std::move(a), std::move(b), std::move(c)); };
      const Formula in_x = inside(m, n, g, x);

      const Formula u_part = f::sup("u", B, f::min({absdiff(f::d(tv("u"), tv("z")), C(g, x, tv("u"))),
                                                   tminus(num(m), f::d(Term::zero(), tv("u")))}));
      const Formula phi_c = f::inf("z", B, f::max({C(g, x, tv("z")), u_part}));
      emit("1(c)", idx, f::sup("g", "G", f::sup("x", B, f::min({in_x, phi_c}))));

      const Term y1 = tv("y1"), y2 = tv("y2");
      emit("2(a)", idx,
           f::sup("g", "G", f::sup("x", B, f::sups({"y1", "y2"}, B,
                                                   f::min({tminus(f::d(y1, y2), tplus(C(g, x, y1), C(g, x, y2))), in_x})))));
      emit("2(a')", idx,
           f::sup("g", "G", f::sup("x", B, f::sups({"y1", "y2"}, B,
                                                   f::min({tminus(C(g, x, y1), tplus(f::d(y1, y2), C(g, x, y2))), in_x})))));

      const Term x1 = tv("x1"), x2 = tv("x2");
      const Formula sum = tplus(C(g, x1, y), C(g, x2, y));
      emit("2(b)", idx,
           f::sup("g", "G", f::sups({"x1", "x2"}, B,
                                    f::min({f::sup("y", B, tminus(f::d(x1, x2), sum)), inside(m, n, g, x1), inside(m, n, g, x2)}))));
      emit("2(c)", idx,
           f::sup("g", "G", f::sups({"x1", "x2"}, B,
                                    f::min({f::inf("y", B, tminus(sum, f::d(x1, x2))), inside(m, n, g, x1), inside(m, n, g, x2)}))));

      emit("3(a)", idx, f::sups({"x", "y"}, B, absdiff(C(Term::one(), x, y), f::d(x, y))));

      const Term gi = Term::inv(g);
      emit("3(b)", idx,
           f::sup("g", "G", f::sups({"x", "y"}, B, f::min({absdiff(C(g, x, y), C(gi, y, x)), in_x, inside(m, n, gi, y)}))));

      const Term gh = Term::mul(g, h), z = tv("z");
      const Formula phi = f::sup("z", B, tminus(C(gh, x, y), tplus(C(gi, y, z), C(h, x, z))));
      emit("3(c)", idx,
           f::sups({"x", "y"}, B,
                   f::sups({"g", "h"}, "G", f::min({phi, inside(m, n, gi, y), inside(m, n, h, x), inside(m, n, gh, x)}))));
    }
  }
  return out;
}

inline std::vector<AxiomInstance> gen_isoR(const SchemeParams& p) {
  return gen_action_axioms(p, [](int m, int n) { return 1 <= m && m <= n; });
}

inline std::vector<AxiomInstance> gen_isoH(const SchemeParams& p) {
  detail::require(static_cast<bool>(p.ort), "ort function missing");
  return gen_action_axioms(p, [&](int m, int n) { return 1 <= m && p.ort(m) < n; });
}

/// Θ_{m,n,s}: every point of B_m is moved by some g by at least 1/s.
inline Condition gen_theta_tree(int m, int n, int s) {
  detail::require(m >= 1 && m < n, "theta requires 1 <= m < n");
  detail::require(s >= 1, "s must be a finite positive integer");
  return Condition::zero(f::sup(
      "v", ball_sort_name(m),
      f::inf("g", "G", f::tminus(detail::num(1.0 / s), detail::circ(m, n, Term::var("g"), Term::var("v"), Term::var("v"))))));
}

/// Θ^{H,s}_{m,n}: a single g moves every point of B_m by at least 1/s(m).
inline Condition gen_theta_hilbert(int m, int n, const std::function<int(int)>& s_fn, const OrtFn& ort) {
  detail::require(m >= 1 && ort && ort(m) < n, "theta^H requires ort(m) < n");
  const int s = s_fn ? s_fn(m) : 1;
  detail::require(s >= 1, "s(m) must be at least 1");
  return Condition::zero(f::inf(
      "g", "G",
      f::sup("v", ball_sort_name(m),
             f::tminus(detail::num(1.0 / s), detail::circ(m, n, Term::var("g"), Term::var("v"), Term::var("v"))))));
}

/// K_δ axiom for (k, m, n, δ). The restricted sup over ⋃ x_i K_δ is written as sup_x with
/// max_i(δ ∸ d(x, x_i)) added to the min.
inline Condition gen_kdelta_instance(int k, int m, int n, double delta) {
  using namespace detail;
  require(k >= 1 && m >= 1 && n >= 1, "k, m, n must be at least 1");
  require(delta > 0.0 && delta < 1.0, "delta must lie in (0, 1)");
  const auto xs = numbered("x", k);
  std::vector<Formula> guards;
  for (const auto& xi : xs) guards.push_back(f::tminus(num(delta), f::d(tv("x"), tv(xi))));
  const Formula body =
      f::max({f::tminus(circ(m, m, tv("x"), tv("v"), tv("v")), num(1.0 / n)), f::absdiff(num(1.0), f::d(tv("v"), Term::zero()))});
  const Formula inner = f::sup("x", "G", f::min({body, max_or_single(std::move(guards))}));
  return Condition::zero(f::sups(xs, "G", f::inf("v", ball_sort_name(m), inner)));
}

inline std::vector<AxiomInstance> gen_kdelta(const SchemeParams& p) {
  detail::require(p.k_max >= 1 && p.m_max >= 1 && p.n_max >= 1, "index bounds must be at least 1");
  detail::require(!p.deltas.empty(), "delta grid is empty");
  std::vector<AxiomInstance> out;
  for (double delta : p.deltas)
    for (int k = 1; k <= p.k_max; ++k)
      for (int m = 1; m <= p.m_max; ++m)
        for (int n = 1; n <= p.n_max; ++n)
          out.push_back({"Kdelta", {{"k", k}, {"m", m}, {"n", n}, {"delta", delta}}, gen_kdelta_instance(k, m, n, delta)});
  return out;
}

/// Axioms of K_grey; the last family is instantiated on the ε grid.
inline std::vector<AxiomInstance> gen_grey(const std::vector<double>& eps_grid = {0.5}) {
  using namespace detail;
  using f::absdiff, f::tminus;
  require(!eps_grid.empty(), "epsilon grid is empty");
  for (double e : eps_grid) require(e >= 0.0 && e <= 0.5, "epsilon must lie in [0, 1/2]");
  const Term x = tv("x");
  auto P = [](Term t) { return f::atom("P", {std::move(t)}); };
  auto Q = [](Term t) { return f::atom("Q", {std::move(t)}); };
  std::vector<AxiomInstance> out;
  auto emit = [&](std::string name, Formula fm, std::vector<std::pair<std::string, double>> idx = {}) {
    out.push_back({std::move(name), std::move(idx), Condition::zero(std::move(fm))});
  };
  emit("P-symmetric", f::sup("x", "G", absdiff(P(x), P(Term::inv(x)))));
  emit("P-half", f::inf("x", "G", absdiff(P(x), num(0.5))));
  emit("Q-symmetric", f::sup("x", "G", absdiff(Q(x), Q(Term::inv(x)))));
  emit("Q-half", f::inf("x", "G", absdiff(Q(x), num(0.5))));
  emit("Q-identity", Q(Term::one()));
  emit("P-Q-disjoint", f::sup("x", "G", f::min({P(x), Q(x)})));
  for (double e : eps_grid) {
    const Formula inner = f::inf("y", "G", f::max({tminus(f::d(x, tv("y")), num(2.0 * e)), tminus(num(e), P(tv("y")))}));
    emit("P-dense", f::sup("x", "G", f::min({tminus(num(e), Q(x)), inner})), {{"eps", e}});
  }
  return out;
}

/// θ(m, k, ε) with W_{m,k} expanded into an explicit min over the m^k words x_{i1}y1...x_{ik}yk.
inline Condition gen_theta_grey(int m, int k, double eps, std::size_t word_cap = 256) {
  using namespace detail;
  require(m >= 1 && k >= 1, "m and k must be at least 1");
  require(eps >= 0.0, "epsilon must be non-negative");
  double words = 1.0;
  for (int i = 0; i < k; ++i) words *= m;
  if (words > static_cast<double>(word_cap)) {
    throw SchemeError("word set W_{" + std::to_string(m) + "," + std::to_string(k) + "} has " + detail::format_number(words) +
                      " words, above the cap " + std::to_string(word_cap));
  }
  const auto xs = numbered("x", m);
  const auto ys = numbered("y", k);
  std::vector<Formula> dists;
  std::vector<int> idx(static_cast<std::size_t>(k), 0);
  while (true) {
    std::vector<Term> factors;
    for (int j = 0; j < k; ++j) {
      factors.push_back(tv(xs[static_cast<std::size_t>(idx[static_cast<std::size_t>(j)])]));
      factors.push_back(tv(ys[static_cast<std::size_t>(j)]));
    }
    dists.push_back(f::d(tv("x"), product(std::move(factors))));
    int j = k - 1;
    while (j >= 0 && ++idx[static_cast<std::size_t>(j)] == m) idx[static_cast<std::size_t>(j--)] = 0;
    if (j < 0) break;
  }
  std::vector<Formula> parts;
  for (const auto& y : ys) parts.push_back(f::atom("P", {tv(y)}));
  parts.push_back(f::tminus(num(eps), min_or_single(std::move(dists))));
  return Condition::zero(f::sups(xs, "G", f::inf("x", "G", f::sups(ys, "G", f::min(std::move(parts))))));
}

/// φ_n for a compact sort: every k_n-tuple contains a pair at distance at most 1/(2n).
inline Condition gen_compactness(int n, int k_n, const std::string& sort = "K", int tuple_cap = 8) {
  using namespace detail;
  require(n >= 1 && k_n >= 1, "n and k_n must be at least 1");
  require(k_n <= tuple_cap, "tuple arity " + std::to_string(k_n) + " exceeds the cap " + std::to_string(tuple_cap));
  const auto zs = numbered("z", k_n);
  std::vector<Formula> pairs;
  for (int i = 0; i < k_n; ++i)
    for (int j = i + 1; j < k_n; ++j) pairs.push_back(f::d(tv(zs[static_cast<std::size_t>(i)]), tv(zs[static_cast<std::size_t>(j)])));
  Formula closest = pairs.empty() ? num(1.0) : min_or_single(std::move(pairs));
  return Condition::zero(f::sups(zs, sort, f::tminus(std::move(closest), num(1.0 / (2.0 * n)))));
}

/// The finite slice of the scheme selected by `p`.
inline std::vector<AxiomInstance> generate(const SchemeParams& p) {
  using detail::require;
  std::vector<AxiomInstance> out;
  switch (p.id) {
    case SchemeId::kdelta: return gen_kdelta(p);
    case SchemeId::isoR: return gen_isoR(p);
    case SchemeId::isoH: return gen_isoH(p);
    case SchemeId::theta_tree:
      require(p.m_max >= 1 && p.n_max >= 1, "index bounds must be at least 1");
      for (int m = 1; m <= p.m_max; ++m)
        for (int n = m + 1; n <= p.n_max; ++n)
          out.push_back({"Theta", {{"m", m}, {"n", n}, {"s", p.s_at(m)}}, gen_theta_tree(m, n, p.s_at(m))});
      return out;
    case SchemeId::theta_hilbert:
      require(static_cast<bool>(p.ort), "ort function missing");
      for (int m = 1; m <= p.m_max; ++m)
        for (int n = m + 1; n <= p.n_max; ++n)
          if (p.ort(m) < n)
            out.push_back({"ThetaH", {{"m", m}, {"n", n}, {"s", p.s_at(m)}},
                           gen_theta_hilbert(m, n, [&](int mm) { return p.s_at(mm); }, p.ort)});
      return out;
    case SchemeId::grey: return gen_grey(p.eps);
    case SchemeId::theta_grey:
      require(!p.eps.empty(), "epsilon grid is empty");
      for (double e : p.eps)
        for (int m = 1; m <= p.m_max; ++m)
          for (int k = 1; k <= p.k_max; ++k)
            out.push_back({"theta", {{"m", m}, {"k", k}, {"eps", e}}, gen_theta_grey(m, k, e, p.word_cap)});
      return out;
    case SchemeId::compactness:
      for (int n = 1; n <= p.n_max; ++n)
        out.push_back({"phi", {{"n", n}, {"k", p.k_max}}, gen_compactness(n, p.k_max, p.compact_sort, p.tuple_cap)});
      return out;
  }
  return out;
}

struct InstanceResult {
  AxiomInstance instance;
  Bracket residual;
  Verdict verdict = Verdict::inconclusive;
};

struct SchemeReport {
  std::string scheme;
  std::vector<InstanceResult> results;
  Verdict overall = Verdict::holds;
  double seconds = 0.0;

  const InstanceResult* first_failure() const {
    for (const auto& r : results)
      if (r.verdict == Verdict::fails) return &r;
    return nullptr;
  }
};

namespace detail {

inline void check_symbols(const Formula& fm, const Structure& s) {
  if (fm.kind == Formula::Kind::atom && fm.predicate != "d" && !s.find_predicate(fm.predicate)) {
    throw SchemeError("structure does not expose '" + fm.predicate + "'");
  }
  if (fm.kind == Formula::Kind::binder) {
    const int i = s.find_sort(fm.sort);
    if (i < 0) throw SchemeError("structure has no sort '" + fm.sort + "'");
    if (s.sort(i).net.empty()) throw SchemeError("sort '" + fm.sort + "' has no net");
  }
  for (const auto& c : fm.children) check_symbols(c, s);
}

}  // namespace detail

/// Evaluates each instance with check_condition; the report holds iff every instance holds.
inline SchemeReport check_instances(const Structure& s, std::vector<AxiomInstance> instances, double tol = 1e-6,
                                    std::string scheme = {}) {
  const auto start = std::chrono::steady_clock::now();
  for (const auto& inst : instances) detail::check_symbols(inst.condition.formula, s);
  SchemeReport r;
  r.scheme = std::move(scheme);
  for (auto& inst : instances) {
    const ConditionResult c = check_condition(inst.condition, s, tol);
    r.overall = conjoin(r.overall, c.verdict);
    r.results.push_back({std::move(inst), c.residual, c.verdict});
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

inline SchemeReport check_scheme(const Structure& s, const SchemeParams& p, double tol = 1e-6) {
  return check_instances(s, generate(p), tol, std::string(to_string(p.id)));
}

}  // namespace contlog
