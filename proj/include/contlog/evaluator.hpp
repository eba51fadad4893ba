#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "contlog/bracket.hpp"
#include "contlog/formula.hpp"
#include "contlog/signature.hpp"
#include "contlog/structure.hpp"

namespace contlog {

/// Moves each sup/inf binder below the min/max children of its body that do not mention the
/// bound variable: sup_v min(a, b(v)) = min(a, sup_v b(v)), likewise for inf and max. Binders
/// whose variable does not occur are dropped (nets are nonempty).
inline Formula miniscope(const Formula& fm) {
  if (fm.kind == Formula::Kind::atom || fm.kind == Formula::Kind::constant) return fm;
  Formula out = fm;
  for (auto& c : out.children) c = miniscope(c);
  if (out.kind != Formula::Kind::binder) return out;
  const Formula& body = out.children[0];
  if (!free_variable_names(body).contains(out.var)) return body;
  if (body.kind != Formula::Kind::connective || (body.op != Connective::min && body.op != Connective::max)) return out;
  std::vector<Formula> inside, outside;
  for (const auto& c : body.children) (free_variable_names(c).contains(out.var) ? inside : outside).push_back(c);
  if (outside.empty()) return out;
  Formula inner = inside.size() == 1 ? inside.front() : f::conn(body.op, inside);
  outside.push_back(miniscope(f::binder(out.quantifier, out.var, out.sort, std::move(inner))));
  return f::conn(body.op, std::move(outside));
}

struct EvalOptions {
  bool prune = true;  // branch-and-bound over binder nets
};

/// Compiled formula over a structure. Holds scratch buffers, so one instance per thread.
class Evaluator {
 public:
  Evaluator(const Structure& s, const Formula& fm, std::map<std::string, std::string> free_sorts = {},
            EvalOptions opts = {})
      : s_(s), opts_(opts) {
    SortChecker checker(s.signature(), std::move(free_sorts));
    checker.check_formula(fm);
    for (const auto& [name, sort] : checker.free_sorts()) free_.emplace_back(name, sort);
    std::vector<std::pair<std::string, int>> scope;
    for (std::size_t i = 0; i < free_.size(); ++i) {
      scope.emplace_back(free_[i].first, static_cast<int>(i));
      slot_sort_.push_back(free_[i].second);
    }
    slots_ = static_cast<int>(free_.size());
    root_ = compile(miniscope(fm), scope, static_cast<int>(free_.size()));
    env_.assign(static_cast<std::size_t>(slots_), 0);
  }

  /// Free variables (name, sort) in slot order.
  const std::vector<std::pair<std::string, std::string>>& free_vars() const { return free_; }
  ValueRange range() const { return nodes_[static_cast<std::size_t>(root_)].range; }

  Bracket operator()(const Assignment& a) {
    for (std::size_t i = 0; i < free_.size(); ++i) {
      auto it = a.find(free_[i].first);
      if (it == a.end()) throw EvalError("free variable '" + free_[i].first + "' is not assigned");
      env_[i] = it->second;
    }
    return eval(root_, false);
  }

  /// Free-variable values in slot order.
  Bracket eval_slots(std::span<const Handle> values) {
    if (values.size() != free_.size()) throw EvalError("wrong number of free-variable values");
    std::copy(values.begin(), values.end(), env_.begin());
    return eval(root_, false);
  }

 private:
  struct TermOp {
    enum class Kind { var, constant, mul, inv } kind;
    Handle value;
  };
  using TermCode = std::vector<TermOp>;

  struct Node {
    Formula::Kind kind = Formula::Kind::constant;
    ValueRange range;
    double value = 0.0;
    // atom
    const PredicateData* pred = nullptr;
    const SortData* metric_sort = nullptr;
    std::vector<TermCode> args;
    // connective
    Connective op = Connective::min;
    double trunc = 1.0;
    std::vector<int> children;
    // binder
    Quantifier quantifier = Quantifier::sup;
    int slot = 0;
    const SortData* sort = nullptr;
    double slack = 0.0;
    bool has_binder = false;
    // Net points where a guard atom of a min (max) body is not at its range bound; the other
    // points all give the body the value `fixed`.
    bool filtered = false;
    bool skipped = false;
    double fixed = 0.0;
    std::vector<Handle> active;
  };

  const Structure& s_;
  EvalOptions opts_;
  std::vector<std::pair<std::string, std::string>> free_;
  std::vector<Node> nodes_;
  std::vector<Handle> env_;
  std::vector<Handle> args_;
  std::vector<std::string> slot_sort_;
  int slots_ = 0;
  int root_ = 0;

  static int lookup(const std::vector<std::pair<std::string, int>>& scope, const std::string& v) {
    for (auto it = scope.rbegin(); it != scope.rend(); ++it) {
      if (it->first == v) return it->second;
    }
    throw EvalError("unbound variable '" + v + "'");
  }

  void compile_term(const Term& t, const std::string& sort, const std::vector<std::pair<std::string, int>>& scope,
                    TermCode& out) const {
    switch (t.kind) {
      case Term::Kind::var: out.push_back({TermOp::Kind::var, lookup(scope, t.name)}); return;
      case Term::Kind::identity: out.push_back({TermOp::Kind::constant, s_.group().identity()}); return;
      case Term::Kind::zero: out.push_back({TermOp::Kind::constant, s_.sort(sort).basepoint}); return;
      case Term::Kind::mul:
        compile_term(t.args[0], sort, scope, out);
        compile_term(t.args[1], sort, scope, out);
        out.push_back({TermOp::Kind::mul, 0});
        return;
      case Term::Kind::inv:
        compile_term(t.args[0], sort, scope, out);
        out.push_back({TermOp::Kind::inv, 0});
        return;
      case Term::Kind::include:
        // Ball inclusions are the identity on handles: all balls share one point table.
        compile_term(t.args[0], s_.signature().ball_sort(t.from)->name, scope, out);
        return;
    }
  }

  int compile(const Formula& fm, std::vector<std::pair<std::string, int>>& scope, int depth) {
    Node n;
    n.kind = fm.kind;
    switch (fm.kind) {
      case Formula::Kind::constant:
        n.value = fm.value;
        n.range = {fm.value, fm.value};
        break;
      case Formula::Kind::atom: {
        std::vector<std::string> sorts;
        if (fm.predicate == "d") {
          SortChecker c(s_.signature());
          for (const auto& [v, idx] : scope) c.push(v, slot_sort_[static_cast<std::size_t>(idx)]);
          sorts = c.check_atom("d", fm.terms);
          n.metric_sort = &s_.sort(sorts[0]);
          n.range = {0.0, n.metric_sort->decl.diameter};
        } else {
          n.pred = s_.find_predicate(fm.predicate);
          if (!n.pred) throw UnknownSymbolError("unknown predicate '" + fm.predicate + "'");
          sorts = n.pred->decl.arg_sorts;
          n.range = n.pred->decl.range;
        }
        for (std::size_t i = 0; i < fm.terms.size(); ++i) {
          TermCode code;
          compile_term(fm.terms[i], sorts[i], scope, code);
          n.args.push_back(std::move(code));
        }
        args_.resize(std::max(args_.size(), fm.terms.size()));
        break;
      }
      case Formula::Kind::connective: {
        n.op = fm.op;
        std::vector<int> kids;
        for (const auto& c : fm.children) kids.push_back(compile(c, scope, depth));
        std::vector<ValueRange> ranges;
        for (int k : kids) ranges.push_back(nodes_[static_cast<std::size_t>(k)].range);
        n.trunc = truncation_bound(ranges);
        n.range = connective_range(fm.op, ranges);
        for (int k : kids) n.has_binder = n.has_binder || nodes_[static_cast<std::size_t>(k)].has_binder;
        if (fm.op == Connective::min || fm.op == Connective::max) {
          std::stable_sort(kids.begin(), kids.end(), [this](int a, int b) {
            return !nodes_[static_cast<std::size_t>(a)].has_binder && nodes_[static_cast<std::size_t>(b)].has_binder;
          });
        }
        n.children = std::move(kids);
        break;
      }
      case Formula::Kind::binder: {
        n.quantifier = fm.quantifier;
        n.sort = &s_.sort(fm.sort);
        if (n.sort->net.empty()) throw EvalError("sort '" + fm.sort + "' has no net");
        n.slot = depth;
        slots_ = std::max(slots_, depth + 1);
        slot_sort_.resize(static_cast<std::size_t>(depth + 1));
        slot_sort_[static_cast<std::size_t>(depth)] = fm.sort;
        scope.emplace_back(fm.var, depth);
        const int body = compile(fm.children[0], scope, depth + 1);
        scope.pop_back();
        n.children = {body};
        n.range = nodes_[static_cast<std::size_t>(body)].range;
        n.has_binder = true;
        if (n.sort->mesh > 0.0) n.slack = slack(body, depth, n.sort->mesh);
        prefilter(n, body, depth);
        break;
      }
    }
    nodes_.push_back(std::move(n));
    return static_cast<int>(nodes_.size()) - 1;
  }

  /// Guard pre-filtering for binders whose body is min(A(v), ...) or max(A(v), ...) with an atom A
  /// depending only on the bound variable.
  void prefilter(Node& n, int body, int slot) {
    const Node& b = nodes_[static_cast<std::size_t>(body)];
    if (b.kind != Formula::Kind::connective || (b.op != Connective::min && b.op != Connective::max)) return;
    const bool is_min = b.op == Connective::min;
    for (int c : b.children) {
      const Node& a = nodes_[static_cast<std::size_t>(c)];
      if (a.kind != Formula::Kind::atom || !a.pred) continue;
      const bool only_slot = std::all_of(a.args.begin(), a.args.end(), [slot](const TermCode& code) {
        return code.size() == 1 && code[0].kind == TermOp::Kind::var && code[0].value == slot;
      });
      if (!only_slot) continue;
      const double bound = is_min ? a.range.lo : a.range.hi;
      if ((is_min ? b.range.lo : b.range.hi) != bound) continue;
      std::vector<Handle> buf(a.args.size());
      n.active.clear();
      n.skipped = false;
      for (Handle p : n.sort->net) {
        std::fill(buf.begin(), buf.end(), p);
        const double v = a.pred->fn(std::span<const Handle>(buf.data(), buf.size()));
        if (v == bound) {
          n.skipped = true;
        } else {
          n.active.push_back(p);
        }
      }
      n.filtered = true;
      n.fixed = bound;
      return;
    }
  }

  static int occurrences(const TermCode& code, int slot) {
    int c = 0;
    for (const auto& op : code) {
      if (op.kind == TermOp::Kind::var && op.value == slot) ++c;
    }
    return c;
  }

  /// Bound on how much node `id` can change when the variable in `slot` moves by `mesh`.
  /// Group terms are 1-Lipschitz per occurrence (bi-invariant metric), inclusions are isometric.
  double slack(int id, int slot, double mesh) const {
    const Node& n = nodes_[static_cast<std::size_t>(id)];
    switch (n.kind) {
      case Formula::Kind::constant: return 0.0;
      case Formula::Kind::atom: {
        double total = 0.0;
        const double width = n.range.hi - n.range.lo;
        for (std::size_t i = 0; i < n.args.size(); ++i) {
          const int occ = occurrences(n.args[i], slot);
          if (occ == 0) continue;
          if (n.metric_sort) {
            total += std::min(occ * mesh, width);
            continue;
          }
          const auto& m = n.pred->moduli[i];
          if (!m) {
            throw EvalError("predicate '" + n.pred->decl.name + "' has no modulus for argument " +
                            std::to_string(i + 1));
          }
          total += m->omega(occ * mesh, width);
        }
        return std::min(total, width);
      }
      case Formula::Kind::connective: {
        if (n.op == Connective::min || n.op == Connective::max) {
          double w = 0.0;
          for (int c : n.children) w = std::max(w, slack(c, slot, mesh));
          return w;
        }
        double w = 0.0;
        for (int c : n.children) w += slack(c, slot, mesh);
        return connective_weight(n.op) * w;
      }
      case Formula::Kind::binder:
        return slack(n.children[0], slot, mesh);
    }
    return 0.0;
  }

  Handle eval_term(const TermCode& code) const {
    std::array<Handle, 32> stack{};
    std::size_t sp = 0;
    const GroupOps* g = nullptr;
    for (const auto& op : code) {
      switch (op.kind) {
        case TermOp::Kind::var:
          if (sp == stack.size()) throw EvalError("term too deep");
          stack[sp++] = env_[static_cast<std::size_t>(op.value)];
          break;
        case TermOp::Kind::constant:
          if (sp == stack.size()) throw EvalError("term too deep");
          stack[sp++] = op.value;
          break;
        case TermOp::Kind::mul:
          if (!g) g = &s_.group();
          stack[sp - 2] = g->mul(stack[sp - 2], stack[sp - 1]);
          --sp;
          break;
        case TermOp::Kind::inv:
          if (!g) g = &s_.group();
          stack[sp - 1] = g->inv(stack[sp - 1]);
          break;
      }
    }
    return stack[0];
  }

  double eval_atom(const Node& n) {
    if (n.metric_sort) return n.metric_sort->metric(eval_term(n.args[0]), eval_term(n.args[1]));
    const std::size_t k = n.args.size();
    std::array<Handle, 8> local{};
    std::span<Handle> buf = k <= local.size() ? std::span<Handle>(local.data(), k)
                                              : std::span<Handle>(args_.data(), k);
    for (std::size_t i = 0; i < k; ++i) buf[i] = eval_term(n.args[i]);
    const double v = n.pred->fn(std::span<const Handle>(buf.data(), k));
    if (!std::isfinite(v)) throw EvalError("predicate '" + n.pred->decl.name + "' returned a non-finite value");
    return v;
  }

  /// Bracket of node `id` under the current environment. With `bounding` set, binders are
  /// replaced by their static ranges (a cheap enclosure used for pruning).
  Bracket eval(int id, bool bounding) {
    const Node& n = nodes_[static_cast<std::size_t>(id)];
    switch (n.kind) {
      case Formula::Kind::constant: return Bracket::exact(n.value);
      case Formula::Kind::atom: return Bracket::exact(eval_atom(n));
      case Formula::Kind::connective: return eval_connective(n, bounding);
      case Formula::Kind::binder:
        if (bounding) return {n.range.lo, n.range.hi};
        return eval_binder(n);
    }
    return {};
  }

  Bracket eval_connective(const Node& n, bool bounding) {
    switch (n.op) {
      case Connective::half: {
        const Bracket a = eval(n.children[0], bounding);
        return {a.lo / 2.0, a.hi / 2.0};
      }
      case Connective::tminus: {
        const Bracket a = eval(n.children[0], bounding);
        const Node& rhs = nodes_[static_cast<std::size_t>(n.children[1])];
        if (a.hi <= rhs.range.lo) return {0.0, 0.0};
        const Bracket b = eval(n.children[1], bounding);
        return {std::max(a.lo - b.hi, 0.0), std::max(a.hi - b.lo, 0.0)};
      }
      case Connective::tplus: {
        const Bracket a = eval(n.children[0], bounding);
        const Bracket b = eval(n.children[1], bounding);
        return {std::min(a.lo + b.lo, n.trunc), std::min(a.hi + b.hi, n.trunc)};
      }
      case Connective::absdiff: {
        const Bracket a = eval(n.children[0], bounding);
        const Bracket b = eval(n.children[1], bounding);
        return {std::max({0.0, a.lo - b.hi, b.lo - a.hi}), std::max(a.hi - b.lo, b.hi - a.lo)};
      }
      case Connective::neg: {
        const Bracket a = eval(n.children[0], bounding);
        return {std::max(n.trunc - a.hi, 0.0), std::max(n.trunc - a.lo, 0.0)};
      }
      case Connective::min: {
        Bracket r{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
        for (int c : n.children) {
          if (nodes_[static_cast<std::size_t>(c)].range.lo >= r.hi) continue;
          const Bracket b = eval(c, bounding);
          r.lo = std::min(r.lo, b.lo);
          r.hi = std::min(r.hi, b.hi);
        }
        return r;
      }
      case Connective::max: {
        Bracket r{-std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
        for (int c : n.children) {
          if (nodes_[static_cast<std::size_t>(c)].range.hi <= r.lo) continue;
          const Bracket b = eval(c, bounding);
          r.lo = std::max(r.lo, b.lo);
          r.hi = std::max(r.hi, b.hi);
        }
        return r;
      }
    }
    return {};
  }

  Bracket eval_binder(const Node& n) {
    const int body = n.children[0];
    const Node& b = nodes_[static_cast<std::size_t>(body)];
    const bool prune = opts_.prune && b.has_binder;
    const bool sup = n.quantifier == Quantifier::sup;
    double lo = sup ? -std::numeric_limits<double>::infinity() : std::numeric_limits<double>::infinity();
    double hi = lo;
    if (n.filtered && n.skipped) lo = hi = n.fixed;
    const bool done = n.filtered && n.skipped && (sup ? lo >= b.range.hi : hi <= b.range.lo);
    auto& slot = env_[static_cast<std::size_t>(n.slot)];
    const Handle saved = slot;
    for (Handle p : done ? std::span<const Handle>() : n.filtered ? std::span<const Handle>(n.active) : std::span<const Handle>(n.sort->net)) {
      slot = p;
      if (prune && std::isfinite(lo)) {
        const Bracket e = eval(body, true);
        if (sup ? e.hi <= lo : e.lo >= hi) continue;
      }
      const Bracket r = eval(body, false);
      if (sup) {
        lo = std::max(lo, r.lo);
        hi = std::max(hi, r.hi);
        if (lo >= b.range.hi) break;
      } else {
        lo = std::min(lo, r.lo);
        hi = std::min(hi, r.hi);
        if (hi <= b.range.lo) break;
      }
    }
    slot = saved;
    Bracket out = sup ? Bracket{lo, hi + n.slack} : Bracket{lo - n.slack, hi};
    return out.clamped(n.range.lo, n.range.hi);
  }
};

inline Bracket eval_bracket(const Formula& fm, const Structure& s, const Assignment& a = {},
                            EvalOptions opts = {}) {
  std::map<std::string, std::string> given;
  Evaluator ev(s, fm, given, opts);
  return ev(a);
}

struct ConditionResult {
  Verdict verdict = Verdict::inconclusive;
  Bracket value;     // bracket of the formula itself
  Bracket residual;  // how far the condition is from holding
};

/// Residual of a condition from the formula's bracket: |φ| for "φ = 0", φ ∸ ε for "φ <= ε".
inline Bracket condition_residual(const Condition& c, const Bracket& v) {
  if (c.relation == Condition::Relation::equals_zero) {
    if (v.lo >= 0.0) return v;
    if (v.hi <= 0.0) return {-v.hi, -v.lo};
    return {0.0, std::max(-v.lo, v.hi)};
  }
  return {std::max(v.lo - c.bound, 0.0), std::max(v.hi - c.bound, 0.0)};
}

inline ConditionResult check_condition(const Condition& c, const Structure& s, double tol = kDefaultTolerance,
                                       EvalOptions opts = {}) {
  if (!(tol > 0.0)) throw std::invalid_argument("tolerance must be positive");
  if (!is_closed(c.formula)) throw EvalError("condition formula has free variables");
  ConditionResult r;
  r.value = eval_bracket(c.formula, s, {}, opts);
  r.residual = condition_residual(c, r.value);
  r.verdict = decide(r.residual, tol);
  return r;
}

}  // namespace contlog
