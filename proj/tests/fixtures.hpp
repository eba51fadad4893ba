#pragma once

#include <cmath>
#include <vector>

#include "contlog/action.hpp"
#include "contlog/metric_group.hpp"

namespace fixtures {

using namespace contlog;

inline GthFn scaled_gth() {
  return [](int m, double delta) { return m + static_cast<int>(std::lround(10.0 * delta)); };
}

template <class Nets>
Nets exact(Nets nets, bool on) {
  if (on) nets.mesh = 0.0;
  return nets;
}

/// ℤ (carrier [−6, 6], d(g, h) = min(1, |g − h| / 10)) acting on the line by translations.
inline ActionStructure<Line> integer_line(int n_max = 3, double step = 0.5, bool exact_nets = true) {
  ActionStructure<Line> a(MetricGroup::integers(-6, 6, 0.1, 1.0), Line{},
                          [](Handle g) { return Line::translation(static_cast<double>(g)); }, scaled_gth(),
                          exact(line_ball_nets(n_max, step), exact_nets), n_max);
  a.set_group_modulus([](int, int) { return Modulus::scaled_identity(0.1); });
  return a;
}

/// Same group, but every g != 1 acts by x ↦ 2x + g (not an isometry).
inline ActionStructure<Line> broken_line(int n_max = 3, double step = 0.25) {
  ActionStructure<Line> a(MetricGroup::integers(-6, 6, 0.1, 1.0), Line{},
                          [](Handle g) { return g == 0 ? Line::translation(0.0) : LineIsometry{2.0, static_cast<double>(g)}; },
                          scaled_gth(), exact(line_ball_nets(n_max, step), true), n_max);
  a.set_group_modulus([](int, int) { return Modulus::scaled_identity(0.1); });
  return a;
}

/// Tripod with unit legs (center 0) and the dihedral group S_3 permuting the legs, discrete
/// metric, gth = id.
inline ActionStructure<FiniteTree> dihedral_spider(int n_max = 2, double step = 0.25, bool exact_nets = true) {
  const FiniteTree t(4, {{0, 1, 1.0}, {0, 2, 1.0}, {0, 3, 1.0}});
  std::vector<TreeAutomorphism> elems;
  MetricGroup g = MetricGroup::words(
      t.identity(), {TreeAutomorphism{{0, 2, 3, 1}}, TreeAutomorphism{{0, 2, 1, 3}}},
      [t](const auto& a, const auto& b) { return t.compose(a, b); }, [t](const auto& a) { return t.inverse(a); },
      [](const auto& a, const auto& b) { return a == b; }, 3, 3, &elems);
  ActionStructure<FiniteTree> a(std::move(g), t, [elems](Handle h) { return elems.at(static_cast<std::size_t>(h)); },
                                [](int m, double) { return m; }, exact(tree_ball_nets(t, n_max, step), exact_nets), n_max);
  a.set_group_modulus([](int, int) { return Modulus::discrete(0.5); });
  return a;
}

/// ℤ (carrier [−4, 4], discrete metric) acting on ℝ¹ by x ↦ x + g.
inline ActionStructure<HilbertSpace> integer_r1(int n_max = 4, double step = 0.25, bool exact_nets = true) {
  const HilbertSpace h(1);
  ActionStructure<HilbertSpace> a(
      MetricGroup::integers(-4, 4), h, [h](Handle g) { return h.translation(Vec::Constant(1, static_cast<double>(g))); },
      [](int m, double) { return m; }, exact(hilbert_ball_nets(h, n_max, step), exact_nets), n_max);
  a.set_group_modulus([](int, int) { return Modulus::discrete(0.5); });
  return a;
}

/// Reflections of ℝ² in the lines x = 1 and x = −1 (carrier {1, r₁, r₂}, discrete metric).
inline ActionStructure<HilbertSpace> two_reflections(int n_max = 3, double step = 0.5, bool exact_nets = true) {
  const HilbertSpace h(2);
  Mat flip = Mat::Identity(2, 2);
  flip(0, 0) = -1.0;
  const AffineIsometry r1{flip, (Vec(2) << 2.0, 0.0).finished()};
  const AffineIsometry r2{flip, (Vec(2) << -2.0, 0.0).finished()};
  std::vector<AffineIsometry> elems;
  MetricGroup g = MetricGroup::words(
      h.identity(), {r1, r2}, [h](const auto& a, const auto& b) { return h.compose(a, b); },
      [h](const auto& a) { return h.inverse(a); }, [h](const auto& a, const auto& b) { return h.same(a, b); }, 1, 2, &elems);
  ActionStructure<HilbertSpace> a(std::move(g), h, [elems](Handle k) { return elems.at(static_cast<std::size_t>(k)); },
                                  [](int m, double) { return m; }, exact(hilbert_ball_nets(h, n_max, step), exact_nets), n_max);
  a.set_group_modulus([](int, int) { return Modulus::discrete(0.5); });
  return a;
}

/// C_4 acting on ℂ through `rep`, with nets on circles of radius step·i and 8 angles.
inline ActionStructure<HilbertSpace> cyclic_unitary(const UnitaryRep& rep, int n_max = 2, double step = 0.25) {
  auto a = unitary_action(MetricGroup::cyclic(static_cast<int>(rep.matrices.size())), rep,
                          exact(circle_nets(n_max, step, 8), true), n_max);
  a.set_group_modulus([](int, int) { return Modulus::discrete(0.5); });
  return a;
}

/// ℤ with carrier [−N, N], the {0,1}-valued metric and V = {−1, 0, 1}: P = ½ on V, Q = ½ off V.
inline GreyGroup grey_integers(int N = 30) { return grey_from_set(MetricGroup::integers(-N, N), {-1, 0, 1}); }

}  // namespace fixtures
