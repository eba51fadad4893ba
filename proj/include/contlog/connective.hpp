#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>

namespace contlog {

enum class Connective { half, tminus, tplus, min, max, absdiff, neg };

inline std::string_view to_string(Connective c) {
  switch (c) {
    case Connective::half: return "half";
    case Connective::tminus: return "-.";
    case Connective::tplus: return "+.";
    case Connective::min: return "min";
    case Connective::max: return "max";
    case Connective::absdiff: return "absdiff";
    case Connective::neg: return "~";
  }
  return "?";
}

class ConnectiveError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Closed value range of a (sub)formula.
struct ValueRange {
  double lo = 0.0;
  double hi = 1.0;
  friend bool operator==(const ValueRange&, const ValueRange&) = default;
};

/// Number of arguments a connective takes; -1 for the n-ary min/max (at least one).
inline int arity(Connective c) {
  switch (c) {
    case Connective::half:
    case Connective::neg: return 1;
    case Connective::min:
    case Connective::max: return -1;
    default: return 2;
  }
}

/// Truncation bound for negation and truncated plus given the operands' ranges.
/// The [0,1] case reproduces 1-x and min(x+y,1); wider operand ranges raise the bound.
inline double truncation_bound(std::span<const ValueRange> operands) {
  double d = 1.0;
  for (const auto& r : operands) d = std::max(d, r.hi);
  return d;
}

/// Exact value of a connective. `bound` is the truncation bound D used by negation (D - x)
/// and truncated plus (min(x+y, D)); it is ignored by the other connectives.
inline double apply_connective(Connective c, std::span<const double> args, double bound = 1.0) {
  const int n = arity(c);
  if ((n >= 0 && static_cast<int>(args.size()) != n) || (n < 0 && args.empty())) {
    throw ConnectiveError("arity mismatch for connective " + std::string(to_string(c)) + ": got " +
                          std::to_string(args.size()));
  }
  for (double a : args) {
    if (!std::isfinite(a)) throw ConnectiveError("non-finite connective argument");
  }
  switch (c) {
    case Connective::half: return args[0] / 2.0;
    case Connective::tminus: return std::max(args[0] - args[1], 0.0);
    case Connective::tplus: return std::min(args[0] + args[1], bound);
    case Connective::min: return *std::min_element(args.begin(), args.end());
    case Connective::max: return *std::max_element(args.begin(), args.end());
    case Connective::absdiff: return std::abs(args[0] - args[1]);
    case Connective::neg:
      if (args[0] > bound) throw ConnectiveError("negation argument outside range [0, D]");
      return bound - args[0];
  }
  return 0.0;
}

/// Checked variant used by the public API: every argument must lie inside [range.lo, range.hi].
inline double apply_connective(Connective c, std::span<const double> args, ValueRange range) {
  for (double a : args) {
    if (a < range.lo || a > range.hi) {
      throw ConnectiveError("connective argument " + std::to_string(a) + " outside working range");
    }
  }
  return apply_connective(c, args, range.hi);
}

/// Static range of a connective's result from the ranges of its operands.
inline ValueRange connective_range(Connective c, std::span<const ValueRange> ops) {
  switch (c) {
    case Connective::half: return {ops[0].lo / 2.0, ops[0].hi / 2.0};
    case Connective::tminus:
      return {std::max(ops[0].lo - ops[1].hi, 0.0), std::max(ops[0].hi - ops[1].lo, 0.0)};
    case Connective::tplus: {
      const double d = truncation_bound(ops);
      return {std::min(ops[0].lo + ops[1].lo, d), std::min(ops[0].hi + ops[1].hi, d)};
    }
    case Connective::min: {
      ValueRange r = ops[0];
      for (const auto& o : ops) { r.lo = std::min(r.lo, o.lo); r.hi = std::min(r.hi, o.hi); }
      return r;
    }
    case Connective::max: {
      ValueRange r = ops[0];
      for (const auto& o : ops) { r.lo = std::max(r.lo, o.lo); r.hi = std::max(r.hi, o.hi); }
      return r;
    }
    case Connective::absdiff: {
      const double lo = std::max({0.0, ops[0].lo - ops[1].hi, ops[1].lo - ops[0].hi});
      return {lo, std::max(ops[0].hi - ops[1].lo, ops[1].hi - ops[0].lo)};
    }
    case Connective::neg: {
      const double d = truncation_bound(ops);
      return {std::max(d - ops[0].hi, 0.0), d - std::min(ops[0].lo, d)};
    }
  }
  return {0.0, 1.0};
}

/// Lipschitz factor of the connective in one of its arguments (sum norm).
inline double connective_weight(Connective c) { return c == Connective::half ? 0.5 : 1.0; }

}  // namespace contlog
