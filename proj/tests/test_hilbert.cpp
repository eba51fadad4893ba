#include <gtest/gtest.h>

#include <random>

#include "contlog/hilbert.hpp"

using namespace contlog;

namespace {

Vec v2(double x, double y) { return (Vec(2) << x, y).finished(); }

Vec random_vec(std::mt19937_64& rng, int dim, double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  Vec x(dim);
  for (int i = 0; i < dim; ++i) x[i] = u(rng);
  return x;
}

Mat random_orthogonal(std::mt19937_64& rng, int dim) {
  Eigen::HouseholderQR<Mat> qr(Mat(random_vec(rng, dim * dim, 1.0).reshaped(dim, dim)));
  return qr.householderQ();
}

double sampled_chord(const Vec& x, const Vec& y, double n, int steps) {
  int inside = 0;
  for (int k = 0; k < steps; ++k) inside += (x + (y - x) * ((k + 0.5) / steps)).norm() <= n;
  return (y - x).norm() * inside / steps;
}

}  // namespace

TEST(Chord, Examples) {
  EXPECT_DOUBLE_EQ(chord_length(v2(0.5, 0), v2(0, -1), 2.0), (v2(0.5, 0) - v2(0, -1)).norm());
  EXPECT_NEAR(chord_length(v2(3, 0), v2(0, 0), 2.0), 2.0, 1e-12);
  EXPECT_EQ(chord_length(v2(3, 3), v2(3, -3), 2.0), 0.0);
  EXPECT_EQ(chord_length(v2(1, 1), v2(1, 1), 2.0), 0.0);
}

TEST(Chord, MatchesSampling) {
  std::mt19937_64 rng(13);
  const int steps = 20000;
  for (int i = 0; i < 200; ++i) {
    const int dim = 1 + i % 4;
    const Vec x = random_vec(rng, dim, 4.0), y = random_vec(rng, dim, 4.0);
    const double n = std::uniform_real_distribution<double>(0.0, 5.0)(rng);
    const double exact = chord_length(x, y, n);
    EXPECT_NEAR(exact, sampled_chord(x, y, n, steps), 2.0 * (x - y).norm() / steps + 1e-12);
    EXPECT_NEAR(exact, chord_length(y, x, n), 1e-9);
    EXPECT_LE(exact, chord_length(x, y, n + 0.1) + 1e-12);
  }
}

TEST(Hilbert, AffineIsometries) {
  std::mt19937_64 rng(2);
  for (int dim = 1; dim <= 4; ++dim) {
    const HilbertSpace h(dim);
    for (int i = 0; i < 25; ++i) {
      const AffineIsometry g{random_orthogonal(rng, dim), random_vec(rng, dim, 3.0)};
      const AffineIsometry k{random_orthogonal(rng, dim), random_vec(rng, dim, 3.0)};
      ASSERT_TRUE(h.is_isometry(g));
      const Vec x = random_vec(rng, dim, 5.0), y = random_vec(rng, dim, 5.0);
      EXPECT_NEAR(h.distance(h.apply(g, x), h.apply(g, y)), h.distance(x, y), 1e-9);
      EXPECT_TRUE(h.is_isometry(h.compose(g, k)));
      EXPECT_TRUE(h.same(h.compose(g, h.inverse(g)), h.identity()));
    }
  }
  EXPECT_FALSE(HilbertSpace(2).is_isometry({2.0 * Mat::Identity(2, 2), Vec::Zero(2)}));
  EXPECT_THROW(HilbertSpace(0), GeometryError);
  EXPECT_THROW(HilbertSpace(kMaxHilbertDimension + 1), GeometryError);
}

TEST(Hilbert, ComplexModel) {
  const HilbertSpace h(2, true);
  const Vec x = v2(1, 0);
  const Vec ix = h.scale({0.0, 1.0}, x);
  EXPECT_NEAR((ix - v2(0, 1)).norm(), 0.0, 1e-15);
  EXPECT_DOUBLE_EQ(h.inner_re(x, ix), 0.0);
  EXPECT_DOUBLE_EQ(h.inner_im(ix, x), 1.0);  // ⟨ix, x⟩ = i
  EXPECT_THROW(HilbertSpace(2).scale({0.0, 1.0}, x), GeometryError);
  EXPECT_THROW(HilbertSpace(3, true), GeometryError);
}

TEST(Ort, ClauseExamples) {
  const double n = 3.0;
  const Vec v = v2(0.5, 0.2), v1 = v2(4.0, 1.0);
  EXPECT_EQ(ort_pair_distance(v, v1, v1, n), 0.0);
  // Collinear: v, v1, v2 on one ray through the origin.
  const auto d = ort_pair_distance(v2(1, 0), v2(5, 0), v2(5.05, 0), n);
  ASSERT_TRUE(d);
  EXPECT_NEAR(*d, 0.0, 1e-12);
  const Vec on_sphere = v2(0, 3.0);
  EXPECT_EQ(ort_boundary_distance(on_sphere, v2(0, 0.5), n), 0.0);
  EXPECT_THROW(verify_ort_properties(2, 2), std::invalid_argument);
  OrtOptions bad;
  bad.eps_grid = {0.5};
  EXPECT_THROW(verify_ort_properties(1, 2, bad), std::invalid_argument);
}

TEST(Ort, GoldenAndBounds) {
  const OrtResult r = compute_ort(1);
  EXPECT_EQ(r.n, 2);
  EXPECT_TRUE(r.certificate.holds());
  EXPECT_EQ(r.certificate.samples_per_clause, 10000);
  int prev = 0;
  for (int m = 1; m <= 10; ++m) {
    const int n = compute_ort(m).n;
    EXPECT_GT(n, m);
    EXPECT_GE(n, prev);
    // Chords through B_m meet the n-sphere at angle θ with sin θ <= m/n; the norm-n points move
    // by at most ε / cos θ, which is below 2ε once n >= 2m/√3.
    EXPECT_LE(n, std::max(m + 1, static_cast<int>(std::ceil(2.0 * m / std::sqrt(3.0)))));
    prev = n;
  }
}

TEST(Ort, CounterexampleBelowThreshold) {
  // m = 10, n = 11: a chord from the edge of B_10 meets the 11-sphere almost tangentially.
  const OrtCertificate c = verify_ort_properties(10, 11);
  EXPECT_FALSE(c.holds());
  EXPECT_GT(std::max({c.slack_a, c.slack_b, c.slack_c}), 0.0);
}

TEST(Representation, DefectExamples) {
  const UnitaryRep triv = UnitaryRep::trivial(4, 2);
  CVec v = CVec::Zero(2);
  v[1] = 1.0;
  EXPECT_EQ(rep_defect(triv, {0, 1, 2, 3}, v), 0.0);
  for (int n = 2; n <= 9; ++n) {
    const UnitaryRep rot = UnitaryRep::cyclic_character(n);
    std::vector<Handle> all;
    for (int g = 0; g < n; ++g) all.push_back(g);
    CVec u(1);
    u[0] = std::polar(1.0, 0.3 * n);
    EXPECT_NEAR(rep_defect(rot, all, u), 2.0 * std::sin(std::numbers::pi * (n / 2) / n), 1e-12);
    EXPECT_EQ(rep_defect(rot, {0}, u), 0.0);
  }
  CVec bad = CVec::Ones(2);
  EXPECT_THROW(rep_defect(triv, {0}, bad), std::invalid_argument);
}

TEST(Representation, InvariantVectors) {
  const auto t = invariant_vector_search(UnitaryRep::trivial(3, 2));
  ASSERT_TRUE(t);
  EXPECT_NEAR(t->norm(), 1.0, 1e-12);
  Mat neg(1, 1);
  neg << -1.0;
  EXPECT_FALSE(invariant_vector_search(UnitaryRep::from_real({Mat::Identity(1, 1), neg})));
  Mat flip(2, 2);
  flip << 1, 0, 0, -1;
  const auto f = invariant_vector_search(UnitaryRep::from_real({Mat::Identity(2, 2), flip}));
  ASSERT_TRUE(f);
  EXPECT_NEAR(std::abs((*f)[0] - 1.0), 0.0, 1e-12);
  EXPECT_NEAR(std::abs((*f)[1]), 0.0, 1e-12);
  EXPECT_FALSE(invariant_vector_search(UnitaryRep::cyclic_character(5)));
}

TEST(Property, DefectIsEquivariant) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> ang(0.0, 2.0 * std::numbers::pi);
  // D_4 as rotations r^k and reflections s r^k on ℝ², handles 0..7 = r^k (k<4), s r^k.
  auto mat = [](int h) {
    const double a = std::numbers::pi / 2.0 * (h % 4);
    Mat r(2, 2);
    r << std::cos(a), -std::sin(a), std::sin(a), std::cos(a);
    Mat s(2, 2);
    s << 1, 0, 0, -1;
    return h < 4 ? r : Mat(s * r);
  };
  std::vector<Mat> ms;
  for (int h = 0; h < 8; ++h) ms.push_back(mat(h));
  const UnitaryRep rep = UnitaryRep::from_real(ms);
  ASSERT_TRUE(rep.is_unitary());
  auto find = [&](const Mat& m) {
    for (int h = 0; h < 8; ++h)
      if ((ms[static_cast<std::size_t>(h)] - m).cwiseAbs().maxCoeff() < 1e-9) return static_cast<Handle>(h);
    return static_cast<Handle>(-1);
  };
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Handle> Q;
    for (int h = 0; h < 8; ++h)
      if (std::uniform_int_distribution<int>(0, 1)(rng)) Q.push_back(h);
    const int g = std::uniform_int_distribution<int>(0, 7)(rng);
    const Mat& G = ms[static_cast<std::size_t>(g)];
    std::vector<Handle> conj;
    for (Handle x : Q) conj.push_back(find(G * ms[static_cast<std::size_t>(x)] * G.transpose()));
    CVec v(2);
    const double a = ang(rng);
    v << std::polar(std::abs(std::cos(a)), ang(rng)), std::polar(std::abs(std::sin(a)), ang(rng));
    const CVec gv = rep.matrices[static_cast<std::size_t>(g)] * v;
    EXPECT_NEAR(rep_defect(rep, conj, gv), rep_defect(rep, Q, v), 1e-12);
  }
}
