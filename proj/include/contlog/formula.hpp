#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "contlog/connective.hpp"

namespace contlog {

/// Terms appearing as predicate arguments. Group terms: var | 1 | inv(t) | t*t.
/// Ball-sort terms: var | 0 | I_{m,n}(t).
struct Term {
  enum class Kind { var, identity, zero, mul, inv, include };

  Kind kind = Kind::var;
  std::string name;  // variable name for Kind::var
  int from = 0;      // I_{from,to}
  int to = 0;
  std::vector<Term> args;

  static Term var(std::string n) { return Term{Kind::var, std::move(n), 0, 0, {}}; }
  static Term one() { return Term{Kind::identity, {}, 0, 0, {}}; }
  static Term zero() { return Term{Kind::zero, {}, 0, 0, {}}; }
  static Term inv(Term t) { return Term{Kind::inv, {}, 0, 0, {std::move(t)}}; }
  static Term mul(Term a, Term b) { return Term{Kind::mul, {}, 0, 0, {std::move(a), std::move(b)}}; }
  static Term include(int m, int n, Term t) {
    return Term{Kind::include, {}, m, n, {std::move(t)}};
  }

  friend bool operator==(const Term&, const Term&) = default;
};

/// Product t1 * t2 * ... (left-associated). Requires at least one factor.
inline Term product(std::vector<Term> factors) {
  Term acc = std::move(factors.front());
  for (std::size_t i = 1; i < factors.size(); ++i) acc = Term::mul(std::move(acc), std::move(factors[i]));
  return acc;
}

enum class Quantifier { sup, inf };

/// Continuous-logic formula: constants, atoms, connectives and sup/inf binders.
struct Formula {
  enum class Kind { constant, atom, connective, binder };

  Kind kind = Kind::constant;
  double value = 0.0;             // constant
  std::string predicate;          // atom
  std::vector<Term> terms;        // atom arguments
  Connective op = Connective::min;
  Quantifier quantifier = Quantifier::sup;
  std::string var;                // binder variable
  std::string sort;               // binder sort
  std::vector<Formula> children;  // connective operands or binder body

  friend bool operator==(const Formula&, const Formula&) = default;
};

namespace f {

inline Formula constant(double v) {
  Formula r;
  r.kind = Formula::Kind::constant;
  r.value = v;
  return r;
}

inline Formula atom(std::string pred, std::vector<Term> terms) {
  Formula r;
  r.kind = Formula::Kind::atom;
  r.predicate = std::move(pred);
  r.terms = std::move(terms);
  return r;
}

inline Formula conn(Connective op, std::vector<Formula> children) {
  Formula r;
  r.kind = Formula::Kind::connective;
  r.op = op;
  r.children = std::move(children);
  return r;
}

inline Formula half(Formula a) { return conn(Connective::half, {std::move(a)}); }
inline Formula tminus(Formula a, Formula b) { return conn(Connective::tminus, {std::move(a), std::move(b)}); }
inline Formula tplus(Formula a, Formula b) { return conn(Connective::tplus, {std::move(a), std::move(b)}); }
inline Formula absdiff(Formula a, Formula b) { return conn(Connective::absdiff, {std::move(a), std::move(b)}); }
inline Formula neg(Formula a) { return conn(Connective::neg, {std::move(a)}); }
inline Formula min(std::vector<Formula> xs) { return conn(Connective::min, std::move(xs)); }
inline Formula max(std::vector<Formula> xs) { return conn(Connective::max, std::move(xs)); }

inline Formula binder(Quantifier q, std::string var, std::string sort, Formula body) {
  Formula r;
  r.kind = Formula::Kind::binder;
  r.quantifier = q;
  r.var = std::move(var);
  r.sort = std::move(sort);
  r.children.push_back(std::move(body));
  return r;
}
inline Formula sup(std::string var, std::string sort, Formula body) {
  return binder(Quantifier::sup, std::move(var), std::move(sort), std::move(body));
}
inline Formula inf(std::string var, std::string sort, Formula body) {
  return binder(Quantifier::inf, std::move(var), std::move(sort), std::move(body));
}

/// sup v1 . sup v2 . ... body, all over the same sort.
inline Formula sups(const std::vector<std::string>& vars, const std::string& sort, Formula body) {
  for (auto it = vars.rbegin(); it != vars.rend(); ++it) body = sup(*it, sort, std::move(body));
  return body;
}

inline Formula d(Term a, Term b) { return atom("d", {std::move(a), std::move(b)}); }

}  // namespace f

/// Closed condition "formula = 0" or "formula <= bound".
struct Condition {
  enum class Relation { equals_zero, at_most };

  Formula formula;
  Relation relation = Relation::equals_zero;
  double bound = 0.0;

  static Condition zero(Formula fm) { return Condition{std::move(fm), Relation::equals_zero, 0.0}; }
  static Condition at_most(Formula fm, double eps) {
    return Condition{std::move(fm), Relation::at_most, eps};
  }

  friend bool operator==(const Condition&, const Condition&) = default;
};

inline void collect_term_vars(const Term& t, std::set<std::string>& out) {
  if (t.kind == Term::Kind::var) out.insert(t.name);
  for (const auto& a : t.args) collect_term_vars(a, out);
}

/// Names of the free variables of a formula.
inline std::set<std::string> free_variable_names(const Formula& fm) {
  std::set<std::string> out;
  switch (fm.kind) {
    case Formula::Kind::constant: break;
    case Formula::Kind::atom:
      for (const auto& t : fm.terms) collect_term_vars(t, out);
      break;
    case Formula::Kind::connective:
      for (const auto& c : fm.children) {
        auto s = free_variable_names(c);
        out.insert(s.begin(), s.end());
      }
      break;
    case Formula::Kind::binder: {
      out = free_variable_names(fm.children[0]);
      out.erase(fm.var);
      break;
    }
  }
  return out;
}

inline bool is_closed(const Formula& fm) { return free_variable_names(fm).empty(); }

inline int binder_count(const Formula& fm) {
  int n = fm.kind == Formula::Kind::binder ? 1 : 0;
  for (const auto& c : fm.children) n += binder_count(c);
  return n;
}

inline bool quantifier_free(const Formula& fm) { return binder_count(fm) == 0; }

/// All subformulas (pre-order, including the formula itself).
inline void collect_subformulas(const Formula& fm, std::vector<const Formula*>& out) {
  out.push_back(&fm);
  for (const auto& c : fm.children) collect_subformulas(c, out);
}

}  // namespace contlog
