#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "contlog/formula.hpp"
#include "contlog/structure.hpp"

namespace testsupport {

using contlog::Formula;
using contlog::Handle;
using contlog::Term;

/// Small fully enumerated structure: cyclic group C_n with a bi-invariant metric, a plain
/// sort of points in [0,1], and random [0,1]-valued predicates. All nets are exact.
struct FiniteWorld {
  int n = 0;
  std::vector<double> line_points;
  std::vector<double> p;               // P : G
  std::vector<double> r;               // R : G x G
  std::vector<double> q;               // Q : S
  contlog::Structure structure;

  double gdist(Handle a, Handle b) const {
    const int k = static_cast<int>(((a - b) % n + n) % n);
    return std::min(k, n - k) / std::max(1.0, std::floor(n / 2.0));
  }
  Handle mul(Handle a, Handle b) const { return (a + b) % n; }
  Handle inv(Handle a) const { return (n - a) % n; }
};

inline FiniteWorld make_world(std::mt19937_64& rng) {
  FiniteWorld w;
  std::uniform_int_distribution<int> size(2, 5);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  w.n = size(rng);
  const int pts = size(rng);
  for (int i = 0; i < pts; ++i) w.line_points.push_back(std::round(unit(rng) * 64.0) / 64.0);
  for (int i = 0; i < w.n; ++i) w.p.push_back(std::round(unit(rng) * 32.0) / 32.0);
  for (int i = 0; i < w.n * w.n; ++i) w.r.push_back(std::round(unit(rng) * 32.0) / 32.0);
  for (int i = 0; i < pts; ++i) w.q.push_back(std::round(unit(rng) * 32.0) / 32.0);
  return w;
}

/// Wires the structure of a world (call after the world object is in its final place).
inline void build_structure(FiniteWorld& w) {
  using namespace contlog;
  Structure s;
  const int n = w.n;
  std::vector<Handle> mul(static_cast<std::size_t>(n * n)), inv(static_cast<std::size_t>(n));
  std::vector<Handle> carrier;
  for (int a = 0; a < n; ++a) {
    carrier.push_back(a);
    inv[static_cast<std::size_t>(a)] = (n - a) % n;
    for (int b = 0; b < n; ++b) mul[static_cast<std::size_t>(a * n + b)] = (a + b) % n;
  }
  s.set_group(GroupOps::table(n, mul, inv, 0));
  const FiniteWorld* wp = &w;
  s.add_sort({{"G", SortKind::group, 0, 1.0}, [wp](Handle a, Handle b) { return wp->gdist(a, b); }, carrier, 0.0, 0});
  std::vector<Handle> pts;
  for (std::size_t i = 0; i < w.line_points.size(); ++i) pts.push_back(static_cast<Handle>(i));
  s.add_sort({{"S", SortKind::plain, 0, 1.0},
              [wp](Handle a, Handle b) {
                return std::abs(wp->line_points[static_cast<std::size_t>(a)] - wp->line_points[static_cast<std::size_t>(b)]);
              },
              pts, 0.0, 0});
  s.add_predicate({{"P", {"G"}, {0.0, 1.0}}, [wp](std::span<const Handle> a) { return wp->p[static_cast<std::size_t>(a[0])]; }, {}});
  s.add_predicate({{"R", {"G", "G"}, {0.0, 1.0}},
                   [wp](std::span<const Handle> a) { return wp->r[static_cast<std::size_t>(a[0] * wp->n + a[1])]; }, {}});
  s.add_predicate({{"Q", {"S"}, {0.0, 1.0}}, [wp](std::span<const Handle> a) { return wp->q[static_cast<std::size_t>(a[0])]; }, {}});
  w.structure = std::move(s);
}

/// Random formula generator over the world signature. `scope` holds (variable, sort).
class FormulaGen {
 public:
  explicit FormulaGen(std::mt19937_64& rng) : rng_(rng) {}

  Formula closed(int depth) {
    std::vector<std::pair<std::string, std::string>> scope;
    return gen(depth, scope);
  }

  Term group_term(const std::vector<std::pair<std::string, std::string>>& scope, int depth) {
    const std::vector<std::string> vars = visible(scope, "G");
    const int pick = pick_int(0, depth > 0 ? 3 : 1);
    if (pick == 0 || vars.empty()) {
      if (vars.empty() || pick_int(0, 3) == 0) return Term::one();
    }
    if (pick == 2 && depth > 0) return Term::inv(group_term(scope, depth - 1));
    if (pick == 3 && depth > 0) return Term::mul(group_term(scope, depth - 1), group_term(scope, depth - 1));
    return Term::var(vars[static_cast<std::size_t>(pick_int(0, static_cast<int>(vars.size()) - 1))]);
  }

 private:
  std::mt19937_64& rng_;
  int counter_ = 0;

  int pick_int(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }

  // Variables of a sort that are not shadowed by a later binder of the same name.
  static std::vector<std::string> visible(const std::vector<std::pair<std::string, std::string>>& scope, const std::string& sort) {
    std::vector<std::string> vars;
    for (std::size_t i = 0; i < scope.size(); ++i) {
      bool shadowed = false;
      for (std::size_t j = i + 1; j < scope.size(); ++j) shadowed = shadowed || scope[j].first == scope[i].first;
      if (!shadowed && scope[i].second == sort) vars.push_back(scope[i].first);
    }
    return vars;
  }

  std::string s_var(const std::vector<std::pair<std::string, std::string>>& scope) {
    const std::vector<std::string> vars = visible(scope, "S");
    if (vars.empty()) return {};
    return vars[static_cast<std::size_t>(pick_int(0, static_cast<int>(vars.size()) - 1))];
  }

  Formula atom(const std::vector<std::pair<std::string, std::string>>& scope) {
    using namespace contlog;
    switch (pick_int(0, 4)) {
      case 0: return f::atom("P", {group_term(scope, 2)});
      case 1: return f::atom("R", {group_term(scope, 2), group_term(scope, 2)});
      case 2: return f::d(group_term(scope, 2), group_term(scope, 2));
      case 3: {
        const std::string v = s_var(scope);
        if (v.empty()) return f::constant(std::round(std::uniform_real_distribution<double>(0, 1)(rng_) * 8) / 8);
        return f::atom("Q", {Term::var(v)});
      }
      default: {
        const std::string a = s_var(scope), b = s_var(scope);
        if (a.empty()) return f::atom("P", {group_term(scope, 2)});
        return f::d(Term::var(a), Term::var(b));
      }
    }
  }

  Formula gen(int depth, std::vector<std::pair<std::string, std::string>>& scope) {
    using namespace contlog;
    if (depth == 0) return pick_int(0, 5) == 0 ? f::constant(pick_int(0, 8) / 8.0) : atom(scope);
    const int k = pick_int(0, 9);
    if (k <= 2) {
      const std::string v = "v" + std::to_string(counter_++ % 4);
      const std::string sort = pick_int(0, 2) == 0 ? "S" : "G";
      scope.emplace_back(v, sort);
      Formula body = gen(depth - 1, scope);
      scope.pop_back();
      return f::binder(pick_int(0, 1) ? Quantifier::sup : Quantifier::inf, v, sort, std::move(body));
    }
    if (k == 3) return atom(scope);
    static constexpr Connective ops[] = {Connective::half, Connective::tminus, Connective::tplus, Connective::min,
                                         Connective::max, Connective::absdiff, Connective::neg};
    const Connective op = ops[pick_int(0, 6)];
    const int ar = arity(op) < 0 ? pick_int(1, 3) : arity(op);
    std::vector<Formula> kids;
    for (int i = 0; i < ar; ++i) kids.push_back(gen(depth - 1, scope));
    return f::conn(op, std::move(kids));
  }
};

/// Brute-force value of a formula on a world: direct recursion, all ranges in [0,1].
class Oracle {
 public:
  explicit Oracle(const FiniteWorld& w) : w_(w) {}

  double value(const Formula& fm) {
    std::map<std::string, Handle> env;
    return eval(fm, env);
  }

 private:
  const FiniteWorld& w_;

  Handle term(const Term& t, const std::map<std::string, Handle>& env) const {
    switch (t.kind) {
      case Term::Kind::var: return env.at(t.name);
      case Term::Kind::identity: return 0;
      case Term::Kind::zero: return 0;
      case Term::Kind::inv: return w_.inv(term(t.args[0], env));
      case Term::Kind::mul: return w_.mul(term(t.args[0], env), term(t.args[1], env));
      case Term::Kind::include: return term(t.args[0], env);
    }
    return 0;
  }

  bool is_s_term(const Term& t, const std::map<std::string, std::string>& sorts) const {
    return t.kind == Term::Kind::var && sorts.count(t.name) && sorts.at(t.name) == "S";
  }

  std::map<std::string, std::string> sorts_;

  double eval(const Formula& fm, std::map<std::string, Handle>& env) {
    using contlog::Connective;
    switch (fm.kind) {
      case Formula::Kind::constant: return fm.value;
      case Formula::Kind::atom: {
        if (fm.predicate == "P") return w_.p[static_cast<std::size_t>(term(fm.terms[0], env))];
        if (fm.predicate == "R") {
          return w_.r[static_cast<std::size_t>(term(fm.terms[0], env) * w_.n + term(fm.terms[1], env))];
        }
        if (fm.predicate == "Q") return w_.q[static_cast<std::size_t>(env.at(fm.terms[0].name))];
        if (is_s_term(fm.terms[0], sorts_)) {
          return std::abs(w_.line_points[static_cast<std::size_t>(env.at(fm.terms[0].name))] -
                          w_.line_points[static_cast<std::size_t>(env.at(fm.terms[1].name))]);
        }
        return w_.gdist(term(fm.terms[0], env), term(fm.terms[1], env));
      }
      case Formula::Kind::connective: {
        std::vector<double> v;
        for (const auto& c : fm.children) v.push_back(eval(c, env));
        switch (fm.op) {
          case Connective::half: return v[0] / 2;
          case Connective::tminus: return v[0] > v[1] ? v[0] - v[1] : 0.0;
          case Connective::tplus: return std::min(1.0, v[0] + v[1]);
          case Connective::min: return *std::min_element(v.begin(), v.end());
          case Connective::max: return *std::max_element(v.begin(), v.end());
          case Connective::absdiff: return v[0] > v[1] ? v[0] - v[1] : v[1] - v[0];
          case Connective::neg: return 1.0 - v[0];
        }
        return 0.0;
      }
      case Formula::Kind::binder: {
        const int count = fm.sort == "G" ? w_.n : static_cast<int>(w_.line_points.size());
        const bool sup = fm.quantifier == contlog::Quantifier::sup;
        double best = sup ? -1e300 : 1e300;
        auto saved_env = env.find(fm.var) != env.end() ? std::optional<Handle>(env[fm.var]) : std::nullopt;
        auto saved_sort = sorts_.find(fm.var) != sorts_.end() ? std::optional<std::string>(sorts_[fm.var]) : std::nullopt;
        sorts_[fm.var] = fm.sort;
        for (int i = 0; i < count; ++i) {
          env[fm.var] = i;
          const double v = eval(fm.children[0], env);
          best = sup ? std::max(best, v) : std::min(best, v);
        }
        if (saved_env) env[fm.var] = *saved_env; else env.erase(fm.var);
        if (saved_sort) sorts_[fm.var] = *saved_sort; else sorts_.erase(fm.var);
        return best;
      }
    }
    return 0.0;
  }
};

}  // namespace testsupport
