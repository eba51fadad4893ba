#include <gtest/gtest.h>

#include <array>
#include <random>

#include "contlog/evaluator.hpp"
#include "contlog/metric_group.hpp"
#include "contlog/parser.hpp"

using namespace contlog;

TEST(ValidateGroup, TruncatedIntegers) {
  const MetricGroup z = MetricGroup::integers(-5, 5);
  EXPECT_TRUE(validate_group(z).ok());
}

TEST(ValidateGroup, CyclicDiscrete) {
  EXPECT_TRUE(validate_group(MetricGroup::cyclic(4)).ok());
}

TEST(ValidateGroup, SumOfNormsIsNotAMetric) {
  const MetricGroup bad = MetricGroup::integers_with_metric(
      -3, 3, [](Handle x, Handle y) { return static_cast<double>(std::llabs(x) + std::llabs(y)); }, 6.0);
  const GroupReport r = validate_group(bad);
  EXPECT_FALSE(r.ok());
  EXPECT_TRUE(r.mentions("identity"));
  // Brute-force check that some triple really fails the triangle inequality or invariance.
  bool found = false;
  for (Handle x = -3; x <= 3; ++x)
    for (Handle y = -3; y <= 3; ++y)
      if (bad.distance(x, x) != 0.0 || bad.distance(x + 1, y + 1) != bad.distance(x, y)) found = true;
  EXPECT_TRUE(found);
  EXPECT_TRUE(r.mentions("left-invariance") || r.mentions("triangle"));
}

TEST(ValidateGroup, NonInvariantFiniteMetric) {
  // C_3 with d(0,1)=1/2, d(0,2)=d(1,2)=1: a metric, but translation by 1 moves the short pair.
  std::vector<double> m = {0, 0.5, 1, 0.5, 0, 1, 1, 1, 0};
  const MetricGroup g = MetricGroup::finite({"0", "1", "2"}, {0, 1, 2, 1, 2, 0, 2, 0, 1}, {0, 2, 1}, 0, m);
  const GroupReport r = validate_group(g);
  EXPECT_TRUE(r.mentions("left-invariance"));
  EXPECT_FALSE(r.mentions("triangle"));
}

TEST(DeltaBall, Examples) {
  EXPECT_EQ(delta_ball(MetricGroup::cyclic(5), 0.5), std::vector<Handle>{0});
  EXPECT_EQ(delta_ball(MetricGroup::integers(-3, 3), 0.99), std::vector<Handle>{0});
  const MetricGroup fine = MetricGroup::integers(-10, 10, 0.1, 1.0);
  const auto k = delta_ball(fine, 0.25);
  EXPECT_EQ(k, (std::vector<Handle>{-2, -1, 0, 1, 2}));
  EXPECT_THROW(delta_ball(fine, 1.0), std::invalid_argument);
}

TEST(DeltaBall, MonotoneAndContainsIdentity) {
  const MetricGroup g = MetricGroup::integers(-20, 20, 0.05, 1.0);
  std::vector<Handle> prev;
  for (double d = 0.0; d < 1.0; d += 0.03) {
    const auto k = delta_ball(g, d);
    EXPECT_TRUE(std::find(k.begin(), k.end(), g.identity()) != k.end());
    EXPECT_TRUE(std::includes(k.begin(), k.end(), prev.begin(), prev.end()));
    prev = k;
  }
}

TEST(Moduli, RegistryExamples) {
  ModulusRegistry reg;
  EXPECT_FALSE(reg.register_modulus("d", 1, Modulus::identity()));
  ASSERT_NE(reg.lookup("d", 1), nullptr);
  EXPECT_EQ(reg.lookup("d", 1)->name(), "id");
  const double r = -2.5;
  reg.register_modulus("lambda", 0, Modulus("z/|r|", [r](double z) { return z / std::abs(r); }));
  EXPECT_DOUBLE_EQ(reg.lookup("lambda", 0)->delta(1.0), 0.4);
  const Modulus gamma = Modulus::lipschitz(3.0);
  reg.register_modulus("circ_{1,2}", 0, Modulus::rescaled(gamma, 8.0));
  EXPECT_DOUBLE_EQ(reg.lookup("circ_{1,2}", 0)->delta(0.8), gamma.delta(0.1));
  const auto warn = reg.register_modulus("d", 1, Modulus::lipschitz(2.0));
  ASSERT_TRUE(warn.has_value());
  EXPECT_EQ(reg.lookup("d", 1)->lipschitz_constant(), 2.0);
  EXPECT_THROW(reg.register_modulus("P", 0, Modulus("bad", [](double e) { return 1.0 / e; })), ModulusError);
  EXPECT_THROW(reg.register_modulus("P", 0, Modulus("zero", [](double) { return 0.0; })), ModulusError);
}

TEST(Property, BiInvarianceFormulationsAgree) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> w(1, 4);
  for (int trial = 0; trial < 100; ++trial) {
    // Random metric on C_5 given by a symmetric weight table on nonzero residues, possibly skewed.
    const int n = 5;
    std::vector<double> base(n);
    for (int k = 1; k < n; ++k) base[static_cast<std::size_t>(k)] = w(rng);
    const bool skew = trial % 2 == 1;
    std::vector<double> m(n * n);
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) {
        const int k = std::min((a - b + n) % n, (b - a + n) % n);
        double v = a == b ? 0.0 : 1.0 + 0.1 * base[static_cast<std::size_t>(k)];
        if (skew && a != b && (a == 0 || b == 0)) v += 0.05;
        m[static_cast<std::size_t>(a * n + b)] = v;
      }
    std::vector<Handle> mul, inv;
    for (int a = 0; a < n; ++a) {
      inv.push_back((n - a) % n);
      for (int b = 0; b < n; ++b) mul.push_back((a + b) % n);
    }
    const MetricGroup g = MetricGroup::finite({"0", "1", "2", "3", "4"}, mul, inv, 0, m);
    const bool bi = check_left_invariance(g).ok() && check_right_invariance(g).ok();
    const bool conj = check_left_invariance(g).ok() && check_conjugation_invariance(g).ok();
    EXPECT_EQ(bi, conj);
    EXPECT_EQ(bi, !skew);
  }
}

TEST(Property, BiInvarianceOnNonAbelianGroup) {
  // S_3 with the discrete metric is bi-invariant; a word-length metric is left- but not right-invariant.
  using Perm = std::array<int, 3>;
  auto compose = [](const Perm& a, const Perm& b) { return Perm{a[b[0]], a[b[1]], a[b[2]]}; };
  auto inverse = [](const Perm& a) {
    Perm r{};
    for (int i = 0; i < 3; ++i) r[a[i]] = i;
    return r;
  };
  std::vector<Perm> elems;
  const MetricGroup s3 = MetricGroup::words(Perm{0, 1, 2}, {Perm{1, 0, 2}, Perm{0, 2, 1}}, compose, inverse,
                                            std::equal_to<>{}, 3, 3, &elems);
  ASSERT_EQ(s3.carrier().size(), 6u);
  EXPECT_TRUE(validate_group(s3).ok());

  auto fixed = [](const Perm& a, const Perm& b) {
    int k = 0;
    for (int i = 0; i < 3; ++i) k += a[i] != b[i];
    return k / 3.0;
  };
  const MetricGroup hamming = MetricGroup::words(Perm{0, 1, 2}, {Perm{1, 0, 2}, Perm{0, 2, 1}}, compose, inverse,
                                                 std::equal_to<>{}, 3, 3, nullptr, fixed);
  EXPECT_TRUE(validate_group(hamming).ok());

  std::vector<Perm> el2;
  MetricGroup probe = MetricGroup::words(Perm{0, 1, 2}, {Perm{1, 0, 2}, Perm{0, 2, 1}}, compose, inverse,
                                         std::equal_to<>{}, 3, 3, &el2);
  auto word_metric = [&](const Perm& a, const Perm& b) {
    const Perm q = compose(inverse(a), b);
    for (std::size_t i = 0; i < el2.size(); ++i)
      if (el2[i] == q) return probe.word_length(static_cast<Handle>(i)) / 3.0;
    return 1.0;
  };
  const MetricGroup left = MetricGroup::words(Perm{0, 1, 2}, {Perm{1, 0, 2}, Perm{0, 2, 1}}, compose, inverse,
                                              std::equal_to<>{}, 3, 3, nullptr, word_metric);
  EXPECT_TRUE(check_left_invariance(left).ok());
  EXPECT_FALSE(check_right_invariance(left).ok());
  EXPECT_FALSE(check_conjugation_invariance(left).ok());
  EXPECT_FALSE(validate_group(left).ok());
}

TEST(Grey, LipschitzAndStructure) {
  const GreyGroup gg = grey_from_set(MetricGroup::integers(-30, 30), {-1, 0, 1});
  EXPECT_TRUE(check_grey_lipschitz(gg).ok());
  EXPECT_DOUBLE_EQ(gg.P(0), 0.5);
  EXPECT_DOUBLE_EQ(gg.P(2), 0.0);
  EXPECT_DOUBLE_EQ(gg.Q(2), 0.5);
  EXPECT_DOUBLE_EQ(gg.Q(1), 0.0);
  const Structure s = grey_structure(gg);
  const auto r = check_condition(parse_condition("sup x:G . |P(x) - P(inv(x))| = 0", s.signature()), s, 1e-9);
  EXPECT_EQ(r.verdict, Verdict::holds);
  const Bracket b = eval_bracket(parse_formula("sup x:G . max(P(x), Q(x))", s.signature()), s);
  EXPECT_EQ(b, Bracket::exact(0.5));
}

TEST(Grey, BrokenLipschitzIsReported) {
  GreyGroup gg = grey_from_set(MetricGroup::integers(-5, 5, 0.1, 1.0), {0});
  gg.P = [](Handle x) { return x == 0 ? 1.0 : 0.0; };
  const GroupReport r = check_grey_lipschitz(gg);
  EXPECT_TRUE(r.mentions("P Lipschitz"));
  EXPECT_FALSE(r.mentions("Q Lipschitz"));
}
