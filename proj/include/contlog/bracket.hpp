#pragma once

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>
#include <string_view>

namespace contlog {

/// Absolute tolerance used for metric-axiom and geometric comparisons.
inline constexpr double kDefaultTolerance = 1e-9;

/// Certified interval [lo, hi] known to contain the true value of a formula.
struct Bracket {
  double lo = 0.0;
  double hi = 0.0;

  static Bracket exact(double v) { return {v, v}; }

  double width() const { return hi - lo; }
  bool contains(double v, double tol = 0.0) const { return lo - tol <= v && v <= hi + tol; }
  bool subset_of(const Bracket& other, double tol = 0.0) const {
    return other.lo - tol <= lo && hi <= other.hi + tol;
  }
  Bracket clamped(double range_lo, double range_hi) const {
    Bracket b{std::clamp(lo, range_lo, range_hi), std::clamp(hi, range_lo, range_hi)};
    return b;
  }
  bool valid() const { return std::isfinite(lo) && std::isfinite(hi) && lo <= hi; }

  friend bool operator==(const Bracket&, const Bracket&) = default;
};

inline std::ostream& operator<<(std::ostream& os, const Bracket& b) {
  return os << '[' << b.lo << ", " << b.hi << ']';
}

enum class Verdict { holds, fails, inconclusive };

inline std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::holds: return "holds";
    case Verdict::fails: return "fails";
    case Verdict::inconclusive: return "inconclusive";
  }
  return "?";
}

/// Ternary decision of "value <= tol" from a bracket: never claims more than the bracket certifies.
inline Verdict decide(const Bracket& residual, double tol) {
  if (residual.hi <= tol) return Verdict::holds;
  if (residual.lo > tol) return Verdict::fails;
  return Verdict::inconclusive;
}

/// Combines verdicts with "all must hold" semantics.
inline Verdict conjoin(Verdict a, Verdict b) {
  if (a == Verdict::fails || b == Verdict::fails) return Verdict::fails;
  if (a == Verdict::inconclusive || b == Verdict::inconclusive) return Verdict::inconclusive;
  return Verdict::holds;
}

}  // namespace contlog
