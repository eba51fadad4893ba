#include <gtest/gtest.h>

#include "contlog/contlog.hpp"
#include "fixtures.hpp"

using namespace contlog;

namespace {

std::filesystem::path fixture(const std::string& name) { return std::filesystem::path(CONTLOG_FIXTURES) / name; }

json integer_line_json() {
  return json::parse(R"({
    "version": 1,
    "group": {"kind": "integers", "min": -6, "max": 6, "scale": 0.1, "cap": 1.0},
    "space": {"kind": "line"},
    "action": {"n_max": 3, "gth": {"kind": "shift", "scale": 10}, "generators": {"1": {"translation": 1}}},
    "nets": {"balls": {"step": 0.5, "exact": true}},
    "moduli": [{"predicate": "circ", "slot": 0, "modulus": {"kind": "scaled_identity", "c": 0.1}}]
  })");
}

std::vector<double> residuals(const SchemeReport& r) {
  std::vector<double> out;
  for (const auto& x : r.results) {
    out.push_back(x.residual.lo);
    out.push_back(x.residual.hi);
  }
  return out;
}

SchemeParams iso(GthFn gth) {
  SchemeParams p;
  p.id = SchemeId::isoR;
  p.m_max = p.n_max = 3;
  p.deltas = {0.25, 0.5};
  p.gth = std::move(gth);
  return p;
}

}  // namespace

TEST(Load, IntegerLineMatchesBuiltStructure) {
  const LoadedStructure ls = load_structure_file(fixture("integer_line.json"));
  ASSERT_TRUE(ls.action);
  const auto& a = std::get<ActionStructure<Line>>(*ls.action);
  const auto built = fixtures::integer_line();
  EXPECT_EQ(a.group().carrier(), built.group().carrier());
  EXPECT_EQ(a.nets().points, built.nets().points);
  for (Handle g : a.group().carrier()) {
    for (double x : {-2.5, 0.0, 1.5}) EXPECT_DOUBLE_EQ(a.act(g, x), built.act(g, x));
  }
  const auto from_file = check_scheme(ls.logic, iso(fixtures::scaled_gth()));
  const auto from_code = check_scheme(expose_predicates(built), iso(fixtures::scaled_gth()));
  EXPECT_EQ(residuals(from_file), residuals(from_code));
  EXPECT_EQ(from_file.overall, Verdict::holds);
}

TEST(Load, BrokenActionLoadsAndFails) {
  const LoadedStructure ls = load_structure_file(fixture("broken_line.json"));
  EXPECT_TRUE(validate_group(ls.group).ok());
  const auto& a = std::get<ActionStructure<Line>>(*ls.action);
  EXPECT_DOUBLE_EQ(a.act(3, 1.0), 5.0);
  EXPECT_DOUBLE_EQ(a.act(0, 1.0), 1.0);
  const auto r = check_scheme(ls.logic, iso(fixtures::scaled_gth()));
  ASSERT_NE(r.first_failure(), nullptr);
  EXPECT_EQ(r.first_failure()->instance.axiom, "2(c)");
}

TEST(Load, WordGroupsGetShortestWordNames) {
  const LoadedStructure ls = load_structure_file(fixture("dihedral_spider.json"));
  const auto& g = ls.group;
  EXPECT_EQ(g.carrier().size(), 6u);
  EXPECT_EQ(g.name(g.identity()), "e");
  const auto r = g.find_name("r");
  const auto s = g.find_name("s");
  ASSERT_TRUE(r && s);
  const auto& a = std::get<ActionStructure<FiniteTree>>(*ls.action);
  EXPECT_EQ(a.isometry(*r).perm, (std::vector<int>{0, 2, 3, 1}));
  EXPECT_EQ(a.isometry(*s).perm, (std::vector<int>{0, 2, 1, 3}));
  for (Handle h : g.carrier()) {
    std::set<std::string> seen;
    EXPECT_TRUE(seen.insert(g.name(h)).second);
    EXPECT_EQ(g.find_name(g.name(h)), h);
  }
}

TEST(Load, UnitaryAndGreyFixtures) {
  const LoadedStructure u = load_structure_file(fixture("cyclic_unitary.json"));
  const auto& a = std::get<ActionStructure<HilbertSpace>>(*u.action);
  EXPECT_EQ(a.space().dimension(), 2);
  EXPECT_EQ(a.ort(2), 2);
  Vec v(2);
  v << 1.0, 0.0;
  const Vec w = a.act(1, v);
  EXPECT_NEAR(w(0), 0.0, 1e-12);
  EXPECT_NEAR(std::abs(w(1)), 1.0, 1e-12);

  const LoadedStructure g = load_structure_file(fixture("grey_integers.json"));
  ASSERT_TRUE(g.grey);
  EXPECT_FALSE(g.action);
  const auto ref = fixtures::grey_integers();
  for (Handle h : g.group.carrier()) {
    EXPECT_EQ(g.grey->P(h), ref.P(h));
    EXPECT_EQ(g.grey->Q(h), ref.Q(h));
  }
  EXPECT_NE(g.logic.find_predicate("P"), nullptr);
}

TEST(Load, GreyTablesAndExplicitNets) {
  json j = json::parse(R"({
    "version": 1,
    "group": {"kind": "cyclic", "order": 3},
    "grey": {"P": {"0": 0, "1": 0.5, "2": 0.5}, "Q": {"0": 0, "1": 0, "2": 0}}
  })");
  const LoadedStructure ls = load_structure(j);
  EXPECT_EQ(ls.grey->P(1), 0.5);
  j["grey"]["Q"].erase("2");
  EXPECT_THROW(load_structure(j), LoadError);

  json t = integer_line_json();
  t["nets"] = json::parse(R"({"balls": {"points": [0, 0.5, -0.5, 2.5], "mesh": 0.25}})");
  const auto a = std::get<ActionStructure<Line>>(*load_structure(t).action);
  EXPECT_EQ(a.nets().points, (std::vector<double>{0, 0.5, -0.5, 2.5}));
  EXPECT_EQ(a.nets().mesh, 0.25);
}

TEST(Load, Rejections) {
  auto broken = [](auto edit) {
    json j = integer_line_json();
    edit(j);
    return j;
  };
  EXPECT_THROW(load_structure(broken([](json& j) { j["version"] = 2; })), LoadError);
  EXPECT_THROW(load_structure(broken([](json& j) { j.erase("group"); })), LoadError);
  EXPECT_THROW(load_structure(broken([](json& j) { j["space"]["kind"] = "sphere"; })), LoadError);
  EXPECT_THROW(load_structure(broken([](json& j) { j["action"].erase("generators"); })), LoadError);
  EXPECT_THROW(load_structure(broken([](json& j) { j["moduli"][0]["modulus"]["kind"] = "cubic"; })), LoadError);
  EXPECT_THROW(load_structure(broken([](json& j) { j["moduli"][0]["slot"] = 1; })), LoadError);
  EXPECT_THROW(load_structure(broken([](json& j) { j["nets"]["balls"]["step"] = 0; })), LoadError);
  EXPECT_THROW(load_structure(broken([](json& j) { j["group"]["min"] = "low"; })), LoadError);
  EXPECT_THROW(load_structure(broken([](json& j) { j["grey"] = {{"V", {99}}}; })), LoadError);
  EXPECT_THROW(load_structure(json::array()), LoadError);
  EXPECT_THROW(load_structure_file(fixture("no_such_file.json")), LoadError);

  json h = json::parse(R"({"version": 1, "group": {"kind": "integers", "min": -1, "max": 1},
    "space": {"kind": "hilbert", "dimension": 2},
    "action": {"n_max": 2, "generators": {"1": {"translation": [1, 0, 0]}}},
    "nets": {"balls": {"step": 0.5}}})");
  EXPECT_THROW(load_structure(h), LoadError);
  json w = json::parse(R"({"version": 1, "group": {"kind": "words", "generators": ["a"], "cap": 1, "product_cap": 1}})");
  EXPECT_THROW(load_structure(w), LoadError);
}

TEST(Records, StableFieldsAndVersion) {
  const LoadedStructure ls = load_structure(integer_line_json());
  const auto r = check_scheme(ls.logic, iso(fixtures::scaled_gth()));
  const json j = to_json(r.results.front(), r.scheme);
  for (const char* key : {"version", "record", "scheme", "axiom", "indices", "condition", "residual", "verdict"}) {
    EXPECT_TRUE(j.contains(key)) << key;
  }
  EXPECT_EQ(j["version"], kSchemaVersion);
  EXPECT_EQ(j["residual"]["lo"], r.results.front().residual.lo);
  EXPECT_EQ(parse_condition(j["condition"].get<std::string>()), r.results.front().instance.condition);
  EXPECT_EQ(j.dump(), to_json(r.results.front(), r.scheme).dump());
}
