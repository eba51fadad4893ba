#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace contlog {

/// A continuity modulus ε ↦ δ(ε): arguments within δ(ε) (non-strict) change the value by at most ε.
class Modulus {
 public:
  Modulus() : Modulus(identity()) {}

  Modulus(std::string name, std::function<double(double)> delta,
          std::optional<double> lipschitz = std::nullopt)
      : name_(std::move(name)), delta_(std::move(delta)), lipschitz_(lipschitz) {}

  static Modulus identity() { return lipschitz(1.0); }

  /// δ(ε) = ε / L.
  static Modulus lipschitz(double constant) {
    if (!(constant > 0.0)) throw std::invalid_argument("Lipschitz constant must be positive");
    std::string n = constant == 1.0 ? "id" : "lipschitz(" + std::to_string(constant) + ")";
    return Modulus(std::move(n), [constant](double eps) { return eps / constant; }, constant);
  }

  /// δ(ε) = c·ε, i.e. "c·id" read as scaling the modulus function.
  static Modulus scaled_identity(double c) {
    return Modulus("scaled_id(" + std::to_string(c) + ")", [c](double eps) { return c * eps; },
                   1.0 / c);
  }

  /// Constant δ: for metrics whose nonzero distances are all above `gap`, any δ < gap works.
  static Modulus discrete(double delta) {
    return Modulus("discrete(" + std::to_string(delta) + ")", [delta](double) { return delta; });
  }

  /// ε ↦ inner(ε / divisor), e.g. the G-slot modulus γ̃(ε/8).
  static Modulus rescaled(const Modulus& inner, double divisor) {
    auto d = inner.delta_;
    std::optional<double> lip;
    if (inner.lipschitz_) lip = *inner.lipschitz_ * divisor;
    return Modulus(inner.name_ + "/" + std::to_string(divisor),
                   [d, divisor](double eps) { return d(eps / divisor); }, lip);
  }

  double delta(double eps) const { return delta_(eps); }
  const std::string& name() const { return name_; }
  std::optional<double> lipschitz_constant() const { return lipschitz_; }

  /// Largest change of the value when an argument moves by at most `dist`, capped at `cap`
  /// (the range width of the predicate). Inverse of δ by bisection for non-linear moduli.
  double omega(double dist, double cap) const {
    if (dist <= 0.0) return 0.0;
    if (lipschitz_) return std::min(*lipschitz_ * dist, cap);
    if (delta_(cap) < dist) return cap;
    double lo = 0.0, hi = cap;
    for (int i = 0; i < 100; ++i) {
      const double mid = 0.5 * (lo + hi);
      if (delta_(mid) >= dist) hi = mid; else lo = mid;
    }
    return hi;
  }

  /// Monotone and positive on a geometric grid of ε values in (0, cap].
  bool check_monotone(double cap = 16.0, int points = 64) const {
    double prev = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < points; ++i) {
      const double eps = cap * std::pow(2.0, -(points - 1 - i) * 0.5);
      const double d = delta_(eps);
      if (!(d > 0.0) || d < prev) return false;
      prev = d;
    }
    return true;
  }

 private:
  std::string name_;
  std::function<double(double)> delta_;
  std::optional<double> lipschitz_;
};

class ModulusError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Moduli keyed by (predicate symbol, argument position).
class ModulusRegistry {
 public:
  using Key = std::pair<std::string, int>;

  /// Registers or replaces a modulus. Returns a warning message when an entry was replaced.
  std::optional<std::string> register_modulus(const std::string& symbol, int position, Modulus m) {
    if (!m.check_monotone()) {
      throw ModulusError("modulus '" + m.name() + "' for " + symbol + "[" +
                         std::to_string(position) + "] is not monotone and positive");
    }
    auto [it, inserted] = entries_.insert_or_assign(Key{symbol, position}, std::move(m));
    if (!inserted) {
      return "replaced modulus for " + symbol + "[" + std::to_string(position) + "]";
    }
    return std::nullopt;
  }

  const Modulus* lookup(const std::string& symbol, int position) const {
    auto it = entries_.find(Key{symbol, position});
    return it == entries_.end() ? nullptr : &it->second;
  }

  bool contains(const std::string& symbol, int position) const {
    return lookup(symbol, position) != nullptr;
  }

  std::size_t size() const { return entries_.size(); }

 private:
  std::map<Key, Modulus> entries_;
};

}  // namespace contlog
