#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "contlog/modulus.hpp"
#include "contlog/signature.hpp"

namespace contlog {

/// Opaque point handle. Each sort interprets its handles (group element code, index into a
/// point table, ...).
using Handle = std::int64_t;

class EvalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Multiplication and inverse on group handles. The integer kind is the additive group ℤ
/// with handles equal to the integers themselves.
class GroupOps {
 public:
  enum class Kind { integers, table, custom };

  static GroupOps integers() {
    GroupOps g;
    g.kind_ = Kind::integers;
    g.identity_ = 0;
    return g;
  }

  /// Handles 0..n-1; `mul[a*n+b]` is the product or -1 when it leaves the table.
  static GroupOps table(std::int64_t n, std::vector<Handle> mul, std::vector<Handle> inv, Handle identity) {
    if (static_cast<std::int64_t>(mul.size()) != n * n || static_cast<std::int64_t>(inv.size()) != n) {
      throw std::invalid_argument("group table has the wrong size");
    }
    GroupOps g;
    g.kind_ = Kind::table;
    g.n_ = n;
    g.mul_ = std::move(mul);
    g.inv_ = std::move(inv);
    g.identity_ = identity;
    return g;
  }

  static GroupOps custom(std::function<Handle(Handle, Handle)> mul, std::function<Handle(Handle)> inv,
                         Handle identity) {
    GroupOps g;
    g.kind_ = Kind::custom;
    g.mul_fn_ = std::move(mul);
    g.inv_fn_ = std::move(inv);
    g.identity_ = identity;
    return g;
  }

  Kind kind() const { return kind_; }
  Handle identity() const { return identity_; }

  Handle mul(Handle a, Handle b) const {
    switch (kind_) {
      case Kind::integers: return a + b;
      case Kind::table: {
        if (a < 0 || b < 0 || a >= n_ || b >= n_) throw EvalError("group handle outside the carrier table");
        const Handle r = mul_[static_cast<std::size_t>(a * n_ + b)];
        if (r < 0) throw EvalError("group product leaves the carrier table");
        return r;
      }
      case Kind::custom: return mul_fn_(a, b);
    }
    return identity_;
  }

  Handle inv(Handle a) const {
    switch (kind_) {
      case Kind::integers: return -a;
      case Kind::table:
        if (a < 0 || a >= n_) throw EvalError("group handle outside the carrier table");
        return inv_[static_cast<std::size_t>(a)];
      case Kind::custom: return inv_fn_(a);
    }
    return identity_;
  }

  /// Product if defined, nullopt when it leaves a partial table.
  std::optional<Handle> try_mul(Handle a, Handle b) const {
    if (kind_ == Kind::table) {
      if (a < 0 || b < 0 || a >= n_ || b >= n_) return std::nullopt;
      const Handle r = mul_[static_cast<std::size_t>(a * n_ + b)];
      if (r < 0) return std::nullopt;
      return r;
    }
    return mul(a, b);
  }

 private:
  Kind kind_ = Kind::integers;
  Handle identity_ = 0;
  std::int64_t n_ = 0;
  std::vector<Handle> mul_;
  std::vector<Handle> inv_;
  std::function<Handle(Handle, Handle)> mul_fn_;
  std::function<Handle(Handle)> inv_fn_;
};

using MetricFn = std::function<double(Handle, Handle)>;
using PredicateFn = std::function<double(std::span<const Handle>)>;

/// Interpretation of one sort: metric, evaluation net and its covering radius.
struct SortData {
  SortDecl decl;
  MetricFn metric;
  std::vector<Handle> net;
  double mesh = 0.0;  // 0: the net is the whole carrier
  Handle basepoint = 0;
  std::function<std::string(Handle)> describe;
};

struct PredicateData {
  PredicateDecl decl;
  PredicateFn fn;
  std::vector<std::optional<Modulus>> moduli;  // one per argument slot
};

/// Many-sorted metric structure: interpreted sorts, group operations and predicates.
class Structure {
 public:
  void add_sort(SortData s) {
    if (find_sort(s.decl.name) >= 0) throw std::invalid_argument("duplicate sort '" + s.decl.name + "'");
    if (s.mesh < 0.0) throw std::invalid_argument("negative mesh for sort '" + s.decl.name + "'");
    if (!s.describe) s.describe = [](Handle h) { return std::to_string(h); };
    sig_.add_sort(s.decl);
    sorts_.push_back(std::move(s));
  }

  void set_group(GroupOps ops) { group_ = std::move(ops); }
  const GroupOps& group() const {
    if (!group_) throw EvalError("structure has no group operations");
    return *group_;
  }
  bool has_group() const { return group_.has_value(); }

  void add_predicate(PredicateData p) {
    if (p.decl.name == "d") throw std::invalid_argument("'d' is reserved for the sort metrics");
    p.moduli.resize(p.decl.arg_sorts.size());
    sig_.add_predicate(p.decl);
    predicates_[p.decl.name] = std::move(p);
  }

  /// Registers a modulus for an argument slot of a predicate (the metric d is built in).
  std::optional<std::string> register_modulus(const std::string& pred, int slot, Modulus m) {
    auto it = predicates_.find(pred);
    if (it == predicates_.end()) throw UnknownSymbolError("unknown predicate '" + pred + "'");
    if (slot < 0 || slot >= static_cast<int>(it->second.moduli.size())) {
      throw std::out_of_range("argument slot out of range for '" + pred + "'");
    }
    auto warning = registry_.register_modulus(pred, slot, m);
    it->second.moduli[static_cast<std::size_t>(slot)] = std::move(m);
    return warning;
  }

  const Signature& signature() const { return sig_; }
  const ModulusRegistry& registry() const { return registry_; }

  int find_sort(const std::string& name) const {
    for (std::size_t i = 0; i < sorts_.size(); ++i) {
      if (sorts_[i].decl.name == name) return static_cast<int>(i);
    }
    return -1;
  }
  const SortData& sort(int i) const { return sorts_.at(static_cast<std::size_t>(i)); }
  SortData& sort(int i) { return sorts_.at(static_cast<std::size_t>(i)); }
  const SortData& sort(const std::string& name) const {
    const int i = find_sort(name);
    if (i < 0) throw UnknownSymbolError("unknown sort '" + name + "'");
    return sorts_[static_cast<std::size_t>(i)];
  }
  std::size_t sort_count() const { return sorts_.size(); }

  const PredicateData* find_predicate(const std::string& name) const {
    auto it = predicates_.find(name);
    return it == predicates_.end() ? nullptr : &it->second;
  }
  const std::map<std::string, PredicateData>& predicates() const { return predicates_; }

  /// Same structure with the given nets replaced (mesh 0: the new net is the carrier).
  Structure restricted(const std::map<std::string, std::vector<Handle>>& nets) const {
    Structure r = *this;
    for (const auto& [name, pts] : nets) {
      const int i = r.find_sort(name);
      if (i < 0) throw UnknownSymbolError("unknown sort '" + name + "'");
      if (pts.empty()) throw std::invalid_argument("empty net for sort '" + name + "'");
      r.sorts_[static_cast<std::size_t>(i)].net = pts;
      r.sorts_[static_cast<std::size_t>(i)].mesh = 0.0;
    }
    return r;
  }

 private:
  Signature sig_;
  std::vector<SortData> sorts_;
  std::optional<GroupOps> group_;
  std::map<std::string, PredicateData> predicates_;
  ModulusRegistry registry_;
};

/// Values of free variables.
using Assignment = std::map<std::string, Handle>;

}  // namespace contlog
