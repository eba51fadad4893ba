#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "contlog/connective.hpp"
#include "contlog/formula.hpp"

namespace contlog {

enum class SortKind { group, ball, plain };

struct SortDecl {
  std::string name;
  SortKind kind = SortKind::plain;
  int ball_index = 0;     // n for the ball sort B_n
  double diameter = 1.0;  // upper bound of the metric on this sort
};

struct PredicateDecl {
  std::string name;
  std::vector<std::string> arg_sorts;
  ValueRange range;
};

inline std::string ball_sort_name(int n) { return "B" + std::to_string(n); }

/// Many-sorted signature: sorts, predicate symbols, and the metric symbol d on every sort.
class Signature {
 public:
  void add_sort(SortDecl s) { sorts_.push_back(std::move(s)); }
  void add_predicate(PredicateDecl p) { predicates_[p.name] = std::move(p); }

  const std::vector<SortDecl>& sorts() const { return sorts_; }
  const std::map<std::string, PredicateDecl>& predicates() const { return predicates_; }

  const SortDecl* find_sort(const std::string& name) const {
    for (const auto& s : sorts_) if (s.name == name) return &s;
    return nullptr;
  }
  const PredicateDecl* find_predicate(const std::string& name) const {
    auto it = predicates_.find(name);
    return it == predicates_.end() ? nullptr : &it->second;
  }
  const SortDecl* group_sort() const {
    for (const auto& s : sorts_) if (s.kind == SortKind::group) return &s;
    return nullptr;
  }
  const SortDecl* ball_sort(int n) const {
    for (const auto& s : sorts_) if (s.kind == SortKind::ball && s.ball_index == n) return &s;
    return nullptr;
  }

 private:
  std::vector<SortDecl> sorts_;
  std::map<std::string, PredicateDecl> predicates_;
};

class SortError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UnknownSymbolError : public SortError {
 public:
  using SortError::SortError;
};

/// Infers and checks sorts of terms and atoms against a signature. Keeps a scope of bound
/// variables and records the sorts inferred for free variables.
class SortChecker {
 public:
  explicit SortChecker(const Signature& sig, std::map<std::string, std::string> free_sorts = {})
      : sig_(sig), free_(std::move(free_sorts)) {}

  void push(const std::string& var, const std::string& sort) {
    if (!sig_.find_sort(sort)) throw UnknownSymbolError("unknown sort '" + sort + "'");
    scope_.emplace_back(var, sort);
  }
  void pop() { scope_.pop_back(); }

  const std::map<std::string, std::string>& free_sorts() const { return free_; }

  std::optional<std::string> lookup(const std::string& var) const {
    for (auto it = scope_.rbegin(); it != scope_.rend(); ++it) {
      if (it->first == var) return it->second;
    }
    auto f = free_.find(var);
    if (f != free_.end()) return f->second;
    return std::nullopt;
  }

  /// Sort of a term, or nullopt when it cannot be determined without context.
  std::optional<std::string> infer(const Term& t) const {
    switch (t.kind) {
      case Term::Kind::var: return lookup(t.name);
      case Term::Kind::identity:
      case Term::Kind::mul:
      case Term::Kind::inv: {
        const auto* g = sig_.group_sort();
        if (!g) throw SortError("group term used but the signature has no group sort");
        return g->name;
      }
      case Term::Kind::zero: return std::nullopt;
      case Term::Kind::include: {
        const auto* b = sig_.ball_sort(t.to);
        if (!b) throw UnknownSymbolError("unknown ball sort B" + std::to_string(t.to));
        return b->name;
      }
    }
    return std::nullopt;
  }

  /// Checks that `t` has sort `expected`, binding unknown free variables.
  void check(const Term& t, const std::string& expected) {
    const SortDecl* s = sig_.find_sort(expected);
    if (!s) throw UnknownSymbolError("unknown sort '" + expected + "'");
    switch (t.kind) {
      case Term::Kind::var: {
        auto known = lookup(t.name);
        if (!known) {
          free_[t.name] = expected;
        } else if (*known != expected) {
          throw SortError("variable '" + t.name + "' has sort " + *known + " but " + expected +
                          " is expected");
        }
        return;
      }
      case Term::Kind::identity:
        if (s->kind != SortKind::group) throw SortError("'1' used where sort " + expected + " is expected");
        return;
      case Term::Kind::zero:
        if (s->kind != SortKind::ball) throw SortError("'0' used where sort " + expected + " is expected");
        return;
      case Term::Kind::mul:
        if (s->kind != SortKind::group) throw SortError("product used where sort " + expected + " is expected");
        check(t.args[0], expected);
        check(t.args[1], expected);
        return;
      case Term::Kind::inv:
        if (s->kind != SortKind::group) throw SortError("inv used where sort " + expected + " is expected");
        check(t.args[0], expected);
        return;
      case Term::Kind::include: {
        if (t.from > t.to) throw SortError("inclusion I_{m,n} requires m <= n");
        if (s->kind != SortKind::ball || s->ball_index != t.to) {
          throw SortError("I_{" + std::to_string(t.from) + "," + std::to_string(t.to) +
                          "} yields B" + std::to_string(t.to) + " but " + expected + " is expected");
        }
        const auto* src = sig_.ball_sort(t.from);
        if (!src) throw UnknownSymbolError("unknown ball sort B" + std::to_string(t.from));
        check(t.args[0], src->name);
        return;
      }
    }
  }

  /// Checks an atom and returns the sorts of its arguments.
  std::vector<std::string> check_atom(const std::string& pred, const std::vector<Term>& terms) {
    if (pred == "d") {
      if (terms.size() != 2) throw SortError("d takes two arguments");
      std::optional<std::string> s = infer(terms[0]);
      if (!s) s = infer(terms[1]);
      if (!s) throw SortError("cannot infer the sort of the arguments of d");
      check(terms[0], *s);
      check(terms[1], *s);
      return {*s, *s};
    }
    const PredicateDecl* p = sig_.find_predicate(pred);
    if (!p) throw UnknownSymbolError("unknown predicate '" + pred + "'");
    if (p->arg_sorts.size() != terms.size()) {
      throw SortError("predicate '" + pred + "' takes " + std::to_string(p->arg_sorts.size()) +
                      " arguments, got " + std::to_string(terms.size()));
    }
    for (std::size_t i = 0; i < terms.size(); ++i) check(terms[i], p->arg_sorts[i]);
    return p->arg_sorts;
  }

  ValueRange atom_range(const std::string& pred, const std::vector<std::string>& arg_sorts) const {
    if (pred == "d") return {0.0, sig_.find_sort(arg_sorts[0])->diameter};
    return sig_.find_predicate(pred)->range;
  }

  /// Checks a whole formula.
  void check_formula(const Formula& fm) {
    switch (fm.kind) {
      case Formula::Kind::constant:
        if (!std::isfinite(fm.value)) throw SortError("non-finite constant");
        return;
      case Formula::Kind::atom: check_atom(fm.predicate, fm.terms); return;
      case Formula::Kind::connective: {
        const int n = arity(fm.op);
        const int got = static_cast<int>(fm.children.size());
        if ((n >= 0 && got != n) || (n < 0 && got == 0)) {
          throw SortError("arity mismatch for connective " + std::string(to_string(fm.op)));
        }
        for (const auto& c : fm.children) check_formula(c);
        return;
      }
      case Formula::Kind::binder:
        push(fm.var, fm.sort);
        check_formula(fm.children[0]);
        pop();
        return;
    }
  }

 private:
  const Signature& sig_;
  std::vector<std::pair<std::string, std::string>> scope_;
  std::map<std::string, std::string> free_;
};

/// Sort-checks a formula and returns the sorts of its free variables.
inline std::map<std::string, std::string> typecheck(const Formula& fm, const Signature& sig,
                                                    std::map<std::string, std::string> given = {}) {
  SortChecker c(sig, std::move(given));
  c.check_formula(fm);
  return c.free_sorts();
}

}  // namespace contlog
