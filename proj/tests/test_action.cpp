#include <gtest/gtest.h>

#include <random>

#include "contlog/action.hpp"
#include "contlog/evaluator.hpp"
#include "contlog/parser.hpp"

using namespace contlog;

namespace {

// ℤ acting on the line by translations, d(g, h) = min(1, |g − h| / 10).
ActionStructure<Line> integer_line_action(int n_max, double step, GthFn gth = {}) {
  if (!gth) gth = [](int m, double delta) { return m + static_cast<int>(std::lround(10.0 * delta)); };
  ActionStructure<Line> a(MetricGroup::integers(-12, 12, 0.1, 1.0), Line{}, [](Handle g) { return Line::translation(static_cast<double>(g)); },
                          gth, line_ball_nets(n_max, step), n_max);
  a.set_group_modulus([](int, int) { return Modulus::scaled_identity(0.1); });
  return a;
}

ActionStructure<HilbertSpace> plane_translations(int n_max, double step) {
  const HilbertSpace h(2);
  ActionStructure<HilbertSpace> a(
      MetricGroup::integers(-6, 6, 0.1, 1.0), h,
      [h](Handle g) { return h.translation((Vec(2) << static_cast<double>(g), 0.0).finished()); },
      [](int m, double delta) { return m + static_cast<int>(std::lround(10.0 * delta)); }, hilbert_ball_nets(h, n_max, step), n_max);
  a.set_group_modulus([](int, int) { return Modulus::scaled_identity(0.1); });
  return a;
}

// Rotations of a tripod with legs of length 1 (C_3, discrete metric).
ActionStructure<FiniteTree> spider_rotation(double step) {
  const FiniteTree t(4, {{0, 1, 1.0}, {0, 2, 1.0}, {0, 3, 1.0}});
  std::vector<TreeAutomorphism> elems;
  const TreeAutomorphism rot{{0, 2, 3, 1}};
  MetricGroup g = MetricGroup::words(
      t.identity(), {rot}, [t](const auto& a, const auto& b) { return t.compose(a, b); },
      [t](const auto& a) { return t.inverse(a); }, [](const auto& a, const auto& b) { return a == b; }, 2, 3, &elems);
  ActionStructure<FiniteTree> a(std::move(g), t, [elems](Handle h) { return elems.at(static_cast<std::size_t>(h)); },
                                [](int m, double) { return m; }, tree_ball_nets(t, 2, step), 2);
  a.set_group_modulus([](int, int) { return Modulus::discrete(0.5); });
  return a;
}

}  // namespace

TEST(Circ, Examples) {
  const auto line = integer_line_action(3, 0.5);
  EXPECT_DOUBLE_EQ(line.circ(1, 2, 3, 1.0, -1.0), 3.0);
  EXPECT_DOUBLE_EQ(line.circ(1, 2, 0, 1.0, -0.5), 1.5);  // identity: d(x, y)
  EXPECT_THROW(line.circ(2, 1, 0, 0.0, 0.0), ActionError);

  const auto plane = plane_translations(3, 0.5);
  const Vec o = Vec::Zero(2);
  EXPECT_NEAR(plane.circ(1, 2, 3, o, o), 2.0, 1e-12);
  EXPECT_EQ(plane.ort(1), 2);
  EXPECT_FALSE(plane.pair_allowed(1, 2));
  EXPECT_TRUE(plane.pair_allowed(1, 3));
}

TEST(Gth, Examples) {
  // Discrete metric: only the identity is within δ < 1, so gth = id works.
  const auto spider = spider_rotation(0.25);
  EXPECT_TRUE(check_gth(spider, 2).ok());
  EXPECT_TRUE(check_gth(integer_line_action(3, 0.5), 3).ok());
  const auto wrong = integer_line_action(3, 0.5, [](int m, double) { return m; });
  const GthReport r = check_gth(wrong, 3);
  ASSERT_FALSE(r.ok());
  EXPECT_GT(r.violations.front().norm, r.violations.front().bound);
  const auto decreasing = integer_line_action(3, 0.5, [](int m, double) { return 20 - m; });
  EXPECT_FALSE(check_gth(decreasing, 3).monotonicity.empty());
}

TEST(Action, IsometryDefect) {
  EXPECT_NEAR(integer_line_action(3, 0.5).isometry_defect(3), 0.0, 1e-12);
  EXPECT_NEAR(spider_rotation(0.25).isometry_defect(2), 0.0, 1e-12);
  EXPECT_NEAR(plane_translations(2, 0.5).isometry_defect(2), 0.0, 1e-12);
}

TEST(Expose, NeutralElementAxiomIsExact) {
  auto a = integer_line_action(2, 0.5);
  BallNets<Line> exact = a.nets();
  exact.mesh = 0.0;
  const ActionStructure<Line> finite(a.group(), Line{}, [](Handle g) { return Line::translation(static_cast<double>(g)); },
                                     [](int m, double) { return m; }, exact, 2);
  ActionStructure<Line> b = finite;
  b.set_group_modulus([](int, int) { return Modulus::scaled_identity(0.1); });
  const Structure s = expose_predicates(b);
  const auto r = check_condition(parse_condition("sup x:B1 . sup y:B1 . |circ_{1,2}(1, x, y) - d(x, y)| = 0", s.signature()), s, 1e-9);
  EXPECT_EQ(r.verdict, Verdict::holds);
  EXPECT_EQ(r.residual, Bracket::exact(0.0));

  // With a declared mesh the bracket widens by the slack but still contains the true value 0.
  const Structure coarse = expose_predicates(a);
  const Bracket w = eval_bracket(parse_formula("sup x:B1 . sup y:B1 . |circ_{1,2}(1, x, y) - d(x, y)|", coarse.signature()), coarse);
  EXPECT_TRUE(w.contains(0.0));
}

TEST(Expose, CircAtomEvaluates) {
  const auto a = integer_line_action(2, 0.5);
  const Structure s = expose_predicates(a);
  const Formula fm = parse_formula("circ_{1,2}(g, x, y)", s.signature());
  const int b1 = s.find_sort("B1");
  Handle x = -1, y = -1;
  for (Handle h : s.sort(b1).net) {
    std::vector<Handle> args{h};
    const std::string d = s.sort(b1).describe(h);
    if (d == "1") x = h;
    if (d == "-1") y = h;
  }
  ASSERT_GE(x, 0);
  ASSERT_GE(y, 0);
  EXPECT_EQ(eval_bracket(fm, s, {{"g", 3}, {"x", x}, {"y", y}}), Bracket::exact(3.0));
}

TEST(Expose, RejectsBadPairsAndMissingModuli) {
  const auto plane = plane_translations(3, 1.0);
  EXPECT_THROW(expose_predicates(plane, {{1, 2}}), ActionError);
  const Structure ok = expose_predicates(plane, {{1, 3}});
  EXPECT_NE(ok.find_predicate("circ_{1,3}"), nullptr);
  EXPECT_EQ(ok.find_predicate("circ_{1,2}"), nullptr);
  ASSERT_NE(ok.registry().lookup("circ_{1,3}", 1), nullptr);
  EXPECT_EQ(ok.registry().lookup("circ_{1,3}", 1)->lipschitz_constant(), 3.0);

  ActionStructure<Line> bare(MetricGroup::integers(-2, 2), Line{}, [](Handle g) { return Line::translation(static_cast<double>(g)); },
                             [](int m, double) { return m; }, line_ball_nets(2, 1.0), 2);
  EXPECT_THROW(expose_predicates(bare), ActionError);
}

TEST(Property, CircRangeAndBallAgreement) {
  std::mt19937_64 rng(12);
  const auto line = integer_line_action(4, 0.25);
  const auto spider = spider_rotation(0.1);
  const auto plane = plane_translations(4, 0.5);
  auto run = [&](const auto& a, int n_max) {
    for (int trial = 0; trial < 300; ++trial) {
      const int m = std::uniform_int_distribution<int>(1, n_max)(rng);
      int n = std::uniform_int_distribution<int>(m, n_max + 2)(rng);
      if (!a.circ_allowed(m, n)) n = std::max(n, a.ort(m));
      const auto pts = a.ball(m);
      std::uniform_int_distribution<std::size_t> pick(0, pts.size() - 1);
      const auto& carrier = a.group().carrier();
      const Handle g = carrier[std::uniform_int_distribution<std::size_t>(0, carrier.size() - 1)(rng)];
      const auto& x = pts[pick(rng)];
      const auto& y = pts[pick(rng)];
      const double c = a.circ(m, n, g, x, y);
      EXPECT_GE(c, 0.0);
      EXPECT_LE(c, m + n + 1e-12);
      const auto gx = a.act(g, x);
      if (a.norm(gx) <= n) EXPECT_NEAR(c, a.space().distance(gx, y), 1e-9);
      const auto gi_y = a.act(a.group().inv(g), y);
      if (a.norm(gx) <= m && a.norm(gi_y) <= m) EXPECT_NEAR(c, a.circ(m, n, a.group().inv(g), y, x), 1e-9);
    }
  };
  run(line, 4);
  run(spider, 2);
  run(plane, 4);
}

TEST(Property, CircLipschitzInY) {
  std::mt19937_64 rng(19);
  auto run = [&](const auto& a, int m, int n, double L) {
    const auto pts = a.ball(m);
    std::uniform_int_distribution<std::size_t> pick(0, pts.size() - 1);
    const auto& carrier = a.group().carrier();
    for (int trial = 0; trial < 2000; ++trial) {
      const Handle g = carrier[std::uniform_int_distribution<std::size_t>(0, carrier.size() - 1)(rng)];
      const auto& x = pts[pick(rng)];
      const auto& y = pts[pick(rng)];
      const auto& y2 = pts[pick(rng)];
      const double diff = std::abs(a.circ(m, n, g, x, y) - a.circ(m, n, g, x, y2));
      EXPECT_LE(diff, L * a.space().distance(y, y2) + 1e-9);
    }
  };
  run(integer_line_action(4, 0.25), 2, 3, 1.0);
  run(spider_rotation(0.1), 1, 2, 1.0);
  const auto plane = plane_translations(4, 0.25);
  run(plane, 1, 3, 3.0);
  run(plane, 2, 4, 3.0);
}
