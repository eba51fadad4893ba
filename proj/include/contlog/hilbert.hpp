#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "contlog/bracket.hpp"
#include "contlog/rtree.hpp"
#include "contlog/structure.hpp"

namespace contlog {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;

inline constexpr int kMaxHilbertDimension = 8;

/// Length of [x, y] ∩ B_n, from the roots of ‖(1−t)x + t y‖² = n² clipped to [0, 1].
inline double chord_length(const Vec& x, const Vec& y, double n) {
  if (n < 0.0) throw GeometryError("ball radius must be non-negative");
  const Vec d = y - x;
  const double a = d.squaredNorm();
  const double c = x.squaredNorm() - n * n;
  if (a == 0.0) return 0.0;
  const double b = 2.0 * x.dot(d);
  const double disc = b * b - 4.0 * a * c;
  if (disc < 0.0) return 0.0;
  const double s = std::sqrt(disc);
  const double t1 = std::max(0.0, (-b - s) / (2.0 * a));
  const double t2 = std::min(1.0, (-b + s) / (2.0 * a));
  return t2 > t1 ? (t2 - t1) * std::sqrt(a) : 0.0;
}

/// The point of norm n on [v, w] closest to v, if the segment meets the sphere.
inline std::optional<Vec> sphere_point(const Vec& v, const Vec& w, double n) {
  const Vec d = w - v;
  const double a = d.squaredNorm();
  const double c = v.squaredNorm() - n * n;
  if (std::abs(c) <= 1e-15 * std::max(1.0, n * n)) return v;
  if (a == 0.0) return std::nullopt;
  const double b = 2.0 * v.dot(d);
  const double disc = b * b - 4.0 * a * c;
  if (disc < 0.0) return std::nullopt;
  const double s = std::sqrt(disc);
  for (double t : {(-b - s) / (2.0 * a), (-b + s) / (2.0 * a)}) {
    if (t >= -1e-12 && t <= 1.0 + 1e-12) return Vec(v + std::clamp(t, 0.0, 1.0) * d);
  }
  return std::nullopt;
}

/// x ↦ A x + b with A orthogonal.
struct AffineIsometry {
  Mat linear;
  Vec shift;
};

/// Real Hilbert space ℝ^dim with basepoint 0. A complex model of dimension k is the
/// realification ℝ^{2k}; the metric is the one of the real part of the inner product.
class HilbertSpace {
 public:
  using Point = Vec;
  using Isometry = AffineIsometry;

  explicit HilbertSpace(int dim, bool complex = false) : dim_(dim), complex_(complex) {
    if (dim < 1 || dim > kMaxHilbertDimension) {
      throw GeometryError("Hilbert dimension must lie in [1, " + std::to_string(kMaxHilbertDimension) + "]");
    }
    if (complex && dim % 2 != 0) throw GeometryError("a complex model needs an even real dimension");
  }

  int dimension() const { return dim_; }
  bool is_complex() const { return complex_; }

  double distance(const Vec& x, const Vec& y) const { return (x - y).norm(); }
  Vec point_along(const Vec& p, const Vec& q, double s) const {
    const double d = distance(p, q);
    if (d == 0.0) return p;
    return p + std::clamp(s, 0.0, d) / d * (q - p);
  }
  Vec basepoint() const { return Vec::Zero(dim_); }

  Vec apply(const AffineIsometry& g, const Vec& x) const { return g.linear * x + g.shift; }
  AffineIsometry compose(const AffineIsometry& a, const AffineIsometry& b) const {
    return {a.linear * b.linear, a.linear * b.shift + a.shift};
  }
  AffineIsometry inverse(const AffineIsometry& g) const {
    const Mat at = g.linear.transpose();
    return {at, -(at * g.shift)};
  }
  AffineIsometry identity() const { return {Mat::Identity(dim_, dim_), Vec::Zero(dim_)}; }
  AffineIsometry translation(const Vec& t) const { return {Mat::Identity(dim_, dim_), t}; }

  bool is_isometry(const AffineIsometry& g, double tol = kDefaultTolerance) const {
    if (g.linear.rows() != dim_ || g.linear.cols() != dim_ || g.shift.size() != dim_) return false;
    return (g.linear.transpose() * g.linear - Mat::Identity(dim_, dim_)).cwiseAbs().maxCoeff() <= tol;
  }
  bool same(const AffineIsometry& a, const AffineIsometry& b, double tol = kDefaultTolerance) const {
    return (a.linear - b.linear).cwiseAbs().maxCoeff() <= tol && (a.shift - b.shift).cwiseAbs().maxCoeff() <= tol;
  }

  double inner(const Vec& x, const Vec& y) const { return x.dot(y); }
  /// Real and imaginary parts of the complex inner product of a realified model.
  double inner_re(const Vec& x, const Vec& y) const { return x.dot(y); }
  double inner_im(const Vec& x, const Vec& y) const {
    if (!complex_) throw GeometryError("imaginary part of the inner product on a real model");
    double s = 0.0;
    for (int k = 0; k < dim_; k += 2) s += x[k + 1] * y[k] - x[k] * y[k + 1];
    return s;
  }
  /// Scalar action by c = re + i·im (im must be 0 on a real model).
  Vec scale(std::complex<double> c, const Vec& x) const {
    if (!complex_) {
      if (c.imag() != 0.0) throw GeometryError("complex scalar on a real model");
      return c.real() * x;
    }
    Vec out(dim_);
    for (int k = 0; k < dim_; k += 2) {
      const std::complex<double> z = c * std::complex<double>(x[k], x[k + 1]);
      out[k] = z.real();
      out[k + 1] = z.imag();
    }
    return out;
  }

  std::string describe(const Vec& x) const {
    std::string s = "(";
    for (int i = 0; i < x.size(); ++i) {
      char buf[40];
      std::snprintf(buf, sizeof buf, "%s%.17g", i ? ", " : "", x[i]);
      s += buf;
    }
    return s + ")";
  }

 private:
  int dim_;
  bool complex_;
};

// ---------------------------------------------------------------------------------------------
// ort threshold

/// Distance between the norm-n points of [v, v1] and [v, v2] (clauses (a), (b)).
inline std::optional<double> ort_pair_distance(const Vec& v, const Vec& v1, const Vec& v2, double n) {
  const auto p1 = sphere_point(v, v1, n);
  const auto p2 = sphere_point(v, v2, n);
  if (!p1 || !p2) return std::nullopt;
  return (*p1 - *p2).norm();
}

/// ‖v1 − v‖ for v the norm-n point of [v1, v2] (clause (c)).
inline std::optional<double> ort_boundary_distance(const Vec& v1, const Vec& v2, double n) {
  const auto p = sphere_point(v1, v2, n);
  if (!p) return std::nullopt;
  return (v1 - *p).norm();
}

struct OrtCertificate {
  int m = 0;
  int n = 0;
  int dimension = 2;
  std::vector<double> eps_grid;
  std::int64_t samples_per_clause = 0;
  double slack_a = -std::numeric_limits<double>::infinity();  // max over samples of distance − 2ε
  double slack_b = -std::numeric_limits<double>::infinity();
  double slack_c = -std::numeric_limits<double>::infinity();

  bool holds(double tol = kDefaultTolerance) const { return slack_a <= tol && slack_b <= tol && slack_c <= tol; }
};

struct OrtOptions {
  int dimension = 2;
  std::int64_t samples = 10000;  // per clause and ε, half random and half local search
  std::vector<double> eps_grid{0.05, 0.1, 0.25, 0.45};
  std::uint64_t seed = 1;
};

namespace detail {

class OrtSampler {
 public:
  OrtSampler(int m, int n, const OrtOptions& o) : m_(m), n_(n), dim_(o.dimension), rng_(o.seed) {}

  Vec unit() {
    Vec x(dim_);
    for (int i = 0; i < dim_; ++i) x[i] = normal_(rng_);
    const double r = x.norm();
    return r > 0.0 ? Vec(x / r) : unit();
  }
  double u() { return unif_(rng_); }
  // Radius in [0, r], half of the time on the sphere itself.
  double radius(double r) { return u() < 0.5 ? r : r * std::pow(u(), 1.0 / dim_); }

  struct Config {
    Vec v, v1, v2;
  };

  bool admissible(char clause, const Config& c, double eps) const {
    switch (clause) {
      case 'a':
        return c.v.norm() <= m_ && std::min(c.v1.norm(), c.v2.norm()) >= n_ && (c.v1 - c.v2).norm() < eps;
      case 'b':
        return c.v.norm() > n_ && std::max(c.v1.norm(), c.v2.norm()) <= m_ && (c.v1 - c.v2).norm() < eps;
      default:
        return c.v1.norm() >= n_ && c.v1.norm() <= n_ + eps && c.v2.norm() <= m_;
    }
  }

  std::optional<double> slack(char clause, const Config& c, double eps) const {
    std::optional<double> d = clause == 'c' ? ort_boundary_distance(c.v1, c.v2, n_) : ort_pair_distance(c.v, c.v1, c.v2, n_);
    if (!d) return std::nullopt;
    return *d - 2.0 * eps;
  }

  Config random(char clause, double eps) {
    Config c;
    switch (clause) {
      case 'a': {
        c.v = radius(m_) * unit();
        c.v1 = (n_ + outward(eps)) * unit();
        c.v2 = c.v1 + eps * (1.0 - 1e-9) * std::sqrt(u()) * unit();
        break;
      }
      case 'b': {
        c.v = (n_ + std::max(1e-12, outward(eps))) * unit();
        c.v1 = radius(m_) * unit();
        c.v2 = c.v1 + eps * (1.0 - 1e-9) * std::sqrt(u()) * unit();
        break;
      }
      default: {
        c.v1 = (n_ + eps * u()) * unit();
        c.v2 = radius(m_) * unit();
        c.v = Vec::Zero(dim_);
      }
    }
    return c;
  }

  Config perturb(const Config& c, double sigma) {
    Config d = c;
    for (Vec* x : {&d.v, &d.v1, &d.v2}) {
      for (int i = 0; i < dim_; ++i) (*x)[i] += sigma * normal_(rng_);
    }
    return d;
  }

 private:
  int m_, n_, dim_;
  std::mt19937_64 rng_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> unif_{0.0, 1.0};

  // Distance beyond the n-sphere: mostly within a few ε, sometimes far out.
  double outward(double eps) { return u() < 0.8 ? 4.0 * eps * u() : 2.0 * n_ * u(); }
};

}  // namespace detail

/// Samples admissible configurations of the three clauses for each ε in the grid and reports
/// the worst slack (distance − 2ε) found by random sampling followed by local search.
inline OrtCertificate verify_ort_properties(int m, int n, const OrtOptions& opts = {}) {
  if (m < 1 || n <= m) throw std::invalid_argument("ort check needs 1 <= m < n");
  for (double e : opts.eps_grid) {
    if (!(e > 0.0 && e < 0.5)) throw std::invalid_argument("epsilon must lie in (0, 1/2)");
  }
  OrtCertificate cert;
  cert.m = m;
  cert.n = n;
  cert.dimension = opts.dimension;
  cert.eps_grid = opts.eps_grid;
  cert.samples_per_clause = opts.samples;
  detail::OrtSampler s(m, n, opts);
  for (char clause : {'a', 'b', 'c'}) {
    double& worst = clause == 'a' ? cert.slack_a : clause == 'b' ? cert.slack_b : cert.slack_c;
    for (double eps : opts.eps_grid) {
      std::optional<detail::OrtSampler::Config> best;
      double best_slack = -std::numeric_limits<double>::infinity();
      const std::int64_t random_budget = opts.samples / 2;
      for (std::int64_t i = 0; i < random_budget; ++i) {
        const auto c = s.random(clause, eps);
        if (!s.admissible(clause, c, eps)) continue;
        const auto sl = s.slack(clause, c, eps);
        if (sl && *sl > best_slack) {
          best_slack = *sl;
          best = c;
        }
      }
      if (best) {
        double sigma = 0.1 * eps;
        for (std::int64_t i = random_budget; i < opts.samples; ++i) {
          const auto c = s.perturb(*best, sigma);
          if (!s.admissible(clause, c, eps)) continue;
          const auto sl = s.slack(clause, c, eps);
          if (sl && *sl > best_slack) {
            best_slack = *sl;
            best = c;
          }
          if ((i - random_budget) % 500 == 499) sigma *= 0.5;
        }
      }
      worst = std::max(worst, best_slack);
    }
  }
  return cert;
}

struct OrtResult {
  int n = 0;
  OrtCertificate certificate;
};

/// Smallest n in (m, max_n] whose certificate shows no violation.
inline OrtResult compute_ort(int m, const OrtOptions& opts = {}, int max_n = 0) {
  if (m < 1) throw std::invalid_argument("ort needs m >= 1");
  if (max_n <= 0) max_n = 8 * m + 8;
  for (int n = m + 1; n <= max_n; ++n) {
    OrtCertificate c = verify_ort_properties(m, n, opts);
    if (c.holds()) return {n, c};
  }
  throw std::runtime_error("no n in (" + std::to_string(m) + ", " + std::to_string(max_n) +
                           "] passed the ort check within budget");
}

// ---------------------------------------------------------------------------------------------
// Unitary representations of finite groups

/// ρ(g) for each group handle 0..size−1 of a finite group.
/// Real matrix of a complex matrix on the interleaved realification (re, im, re, im, ...).
inline Mat realify(const CMat& u) {
  Mat r(2 * u.rows(), 2 * u.cols());
  for (Eigen::Index j = 0; j < u.rows(); ++j) {
    for (Eigen::Index k = 0; k < u.cols(); ++k) {
      const auto z = u(j, k);
      r(2 * j, 2 * k) = z.real();
      r(2 * j, 2 * k + 1) = -z.imag();
      r(2 * j + 1, 2 * k) = z.imag();
      r(2 * j + 1, 2 * k + 1) = z.real();
    }
  }
  return r;
}

inline Vec realify(const CVec& v) {
  Vec r(2 * v.size());
  for (Eigen::Index j = 0; j < v.size(); ++j) {
    r[2 * j] = v[j].real();
    r[2 * j + 1] = v[j].imag();
  }
  return r;
}

struct UnitaryRep {
  std::vector<CMat> matrices;

  int dimension() const { return matrices.empty() ? 0 : static_cast<int>(matrices.front().rows()); }

  static UnitaryRep trivial(int group_size, int dim) {
    return {std::vector<CMat>(static_cast<std::size_t>(group_size), CMat::Identity(dim, dim))};
  }
  /// C_n on ℂ by v ↦ e^{2πi·k·g/n} v.
  static UnitaryRep cyclic_character(int n, int k = 1) {
    UnitaryRep r;
    for (int g = 0; g < n; ++g) {
      CMat m(1, 1);
      m(0, 0) = std::polar(1.0, 2.0 * std::numbers::pi * k * g / n);
      r.matrices.push_back(m);
    }
    return r;
  }
  static UnitaryRep from_real(const std::vector<Mat>& ms) {
    UnitaryRep r;
    for (const auto& m : ms) r.matrices.push_back(m.cast<std::complex<double>>());
    return r;
  }

  bool is_unitary(double tol = kDefaultTolerance) const {
    for (const auto& m : matrices) {
      if ((m.adjoint() * m - CMat::Identity(m.rows(), m.cols())).cwiseAbs().maxCoeff() > tol) return false;
    }
    return true;
  }
};

/// sup over x in Q of ‖ρ(x)v − v‖ for a unit vector v.
inline double rep_defect(const UnitaryRep& rep, const std::vector<Handle>& Q, const CVec& v,
                         double tol = kDefaultTolerance) {
  if (std::abs(v.norm() - 1.0) > tol) throw std::invalid_argument("vector must have norm 1");
  double best = 0.0;
  for (Handle x : Q) best = std::max(best, (rep.matrices.at(static_cast<std::size_t>(x)) * v - v).norm());
  return best;
}

/// Unit vector fixed by every ρ(g), from the null space of the stacked ρ(g) − I; none when
/// the smallest singular value exceeds `tol`.
inline std::optional<CVec> invariant_vector_search(const UnitaryRep& rep, double tol = 1e-9) {
  const int d = rep.dimension();
  if (d == 0) return std::nullopt;
  CMat stacked(static_cast<Eigen::Index>(rep.matrices.size()) * d, d);
  for (std::size_t i = 0; i < rep.matrices.size(); ++i) {
    stacked.block(static_cast<Eigen::Index>(i) * d, 0, d, d) = rep.matrices[i] - CMat::Identity(d, d);
  }
  Eigen::JacobiSVD<CMat> svd(stacked, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  const Eigen::Index last = d - 1;
  if (sv.size() > last && sv[last] > tol) return std::nullopt;
  CVec v = svd.matrixV().col(last);
  // Fix the phase so the largest coordinate is real and positive.
  Eigen::Index k = 0;
  v.cwiseAbs().maxCoeff(&k);
  v *= std::conj(v[k]) / std::abs(v[k]);
  return v.normalized();
}

}  // namespace contlog
