#pragma once

#include <complex>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "contlog/action.hpp"
#include "contlog/analysis.hpp"
#include "contlog/hilbert.hpp"
#include "contlog/metric_group.hpp"
#include "contlog/rtree.hpp"
#include "contlog/schemes.hpp"
#include "contlog/structure.hpp"

namespace contlog {

inline constexpr int kSchemaVersion = 1;

class LoadError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using json = nlohmann::json;
using AnyAction = std::variant<ActionStructure<Line>, ActionStructure<FiniteTree>, ActionStructure<HilbertSpace>>;

/// A structure file after loading: the group, the optional action and grey predicates, and the
/// exposed many-sorted structure.
struct LoadedStructure {
  std::string space_kind = "none";
  MetricGroup group = MetricGroup::integers(0, 0);
  std::optional<AnyAction> action;
  std::optional<GreyGroup> grey;
  Structure logic;
};

namespace io {

inline const json& need(const json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) throw LoadError(where + ": missing key '" + key + "'");
  return j.at(key);
}

template <class T>
T get(const json& j, const char* key, const std::string& where) {
  try {
    return need(j, key, where).get<T>();
  } catch (const json::exception& e) {
    throw LoadError(where + "." + key + ": " + e.what());
  }
}

template <class T>
T get_or(const json& j, const char* key, T fallback, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) return fallback;
  return get<T>(j, key, where);
}

inline Modulus parse_modulus(const json& j, const std::string& where) {
  const auto kind = get<std::string>(j, "kind", where);
  if (kind == "identity") return Modulus::identity();
  if (kind == "lipschitz") return Modulus::lipschitz(get<double>(j, "constant", where));
  if (kind == "scaled_identity") return Modulus::scaled_identity(get<double>(j, "c", where));
  if (kind == "discrete") return Modulus::discrete(get<double>(j, "delta", where));
  throw LoadError(where + ": unknown modulus kind '" + kind + "'");
}

inline std::vector<double> metric_matrix(const json& j, std::size_t n, const std::string& where) {
  if (!j.contains("metric") || j.at("metric") == "discrete") return MetricGroup::discrete_metric(n);
  std::vector<double> out;
  const auto rows = get<std::vector<std::vector<double>>>(j, "metric", where);
  if (rows.size() != n) throw LoadError(where + ".metric: expected " + std::to_string(n) + " rows");
  for (const auto& r : rows) {
    if (r.size() != n) throw LoadError(where + ".metric: ragged matrix");
    out.insert(out.end(), r.begin(), r.end());
  }
  return out;
}

/// Groups that do not depend on the space: integers, cyclic, finite tables.
inline std::optional<MetricGroup> parse_plain_group(const json& j) {
  const std::string where = "group";
  const auto kind = get<std::string>(j, "kind", where);
  if (kind == "integers") {
    return MetricGroup::integers(get<std::int64_t>(j, "min", where), get<std::int64_t>(j, "max", where),
                                 get_or<double>(j, "scale", 1.0, where), get_or<double>(j, "cap", 1.0, where));
  }
  if (kind == "cyclic") {
    const int n = get<int>(j, "order", where);
    if (n < 1) throw LoadError("group.order must be positive");
    MetricGroup g = MetricGroup::cyclic(n);
    if (j.contains("metric")) {
      std::vector<std::string> names;
      std::vector<Handle> mul, inv;
      for (int a = 0; a < n; ++a) {
        names.push_back(std::to_string(a));
        inv.push_back((n - a) % n);
        for (int b = 0; b < n; ++b) mul.push_back((a + b) % n);
      }
      g = MetricGroup::finite(names, mul, inv, 0, metric_matrix(j, static_cast<std::size_t>(n), where));
    }
    return g;
  }
  if (kind == "finite") {
    const auto names = get<std::vector<std::string>>(j, "elements", where);
    const auto product = get<std::vector<std::vector<std::string>>>(j, "product", where);
    const std::size_t n = names.size();
    auto index = [&](const std::string& s) -> Handle {
      for (std::size_t i = 0; i < n; ++i) if (names[i] == s) return static_cast<Handle>(i);
      throw LoadError("group.product: unknown element '" + s + "'");
    };
    if (product.size() != n) throw LoadError("group.product: expected " + std::to_string(n) + " rows");
    std::vector<Handle> mul;
    for (const auto& row : product) {
      if (row.size() != n) throw LoadError("group.product: ragged table");
      for (const auto& s : row) mul.push_back(s.empty() ? -1 : index(s));
    }
    const Handle e = index(get<std::string>(j, "identity", where));
    std::vector<Handle> inv(n, -1);
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = 0; b < n; ++b)
        if (mul[a * n + b] == e) inv[a] = static_cast<Handle>(b);
    return MetricGroup::finite(names, mul, inv, e, metric_matrix(j, n, where));
  }
  if (kind == "words") return std::nullopt;
  throw LoadError("group: unknown kind '" + kind + "'");
}

// Points and isometries per space.

inline double parse_point(const Line&, const json& j) { return j.get<double>(); }
inline Vec parse_point(const HilbertSpace& h, const json& j) {
  const auto v = j.get<std::vector<double>>();
  if (static_cast<int>(v.size()) != h.dimension()) throw LoadError("point has the wrong dimension");
  return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size()));
}
inline TreePoint parse_point(const FiniteTree& t, const json& j) {
  if (j.is_number_integer()) return t.vertex(j.get<int>());
  if (j.contains("vertex")) return t.vertex(j.at("vertex").get<int>());
  return t.on_edge(get<int>(j, "edge", "point"), get<double>(j, "offset", "point"));
}

inline LineIsometry parse_isometry(const Line&, const json& j) {
  if (j.contains("translation")) return Line::translation(j.at("translation").get<double>());
  if (j.contains("reflection")) return Line::reflection(j.at("reflection").get<double>());
  return {get<double>(j, "s", "isometry"), get<double>(j, "t", "isometry")};
}
inline TreeAutomorphism parse_isometry(const FiniteTree& t, const json& j) {
  TreeAutomorphism a{j.is_array() ? j.get<std::vector<int>>() : get<std::vector<int>>(j, "perm", "isometry")};
  if (static_cast<int>(a.perm.size()) != t.vertex_count()) throw LoadError("automorphism has the wrong length");
  return a;
}
inline AffineIsometry parse_isometry(const HilbertSpace& h, const json& j) {
  const int d = h.dimension();
  AffineIsometry g{Mat::Identity(d, d), Vec::Zero(d)};
  if (j.contains("translation")) {
    g.shift = parse_point(h, j.at("translation"));
    return g;
  }
  const auto rows = get<std::vector<std::vector<double>>>(j, "linear", "isometry");
  if (static_cast<int>(rows.size()) != d) throw LoadError("linear part has the wrong size");
  for (int r = 0; r < d; ++r) {
    if (static_cast<int>(rows[static_cast<std::size_t>(r)].size()) != d) throw LoadError("linear part has the wrong size");
    for (int c = 0; c < d; ++c) g.linear(r, c) = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
  }
  if (j.contains("shift")) g.shift = parse_point(h, j.at("shift"));
  return g;
}

inline bool same_isometry(const Line& l, const LineIsometry& a, const LineIsometry& b) { return l.same(a, b); }
inline bool same_isometry(const FiniteTree&, const TreeAutomorphism& a, const TreeAutomorphism& b) { return a == b; }
inline bool same_isometry(const HilbertSpace& h, const AffineIsometry& a, const AffineIsometry& b) { return h.same(a, b); }

inline GthFn parse_gth(const json& action) {
  if (!action.contains("gth")) return [](int m, double) { return m; };
  const auto& j = action.at("gth");
  const auto kind = get<std::string>(j, "kind", "action.gth");
  if (kind == "identity") return [](int m, double) { return m; };
  if (kind == "shift") {
    const double scale = get<double>(j, "scale", "action.gth");
    return [scale](int m, double delta) { return m + static_cast<int>(std::lround(scale * delta)); };
  }
  throw LoadError("action.gth: unknown kind '" + kind + "'");
}

template <GeodesicSpace S>
BallNets<S> parse_nets(const S& space, const json& j, int n_max) {
  const auto& b = need(j, "balls", "nets");
  BallNets<S> nets;
  if (b.contains("points")) {
    for (const auto& p : b.at("points")) nets.points.push_back(parse_point(space, p));
    nets.mesh = get<double>(b, "mesh", "nets.balls");
    return nets;
  }
  const double step = get<double>(b, "step", "nets.balls");
  if (!(step > 0.0)) throw LoadError("nets.balls.step must be positive");
  if constexpr (std::is_same_v<S, Line>) {
    nets = line_ball_nets(n_max, step);
  } else if constexpr (std::is_same_v<S, FiniteTree>) {
    nets = tree_ball_nets(space, n_max, step);
  } else {
    if (b.contains("angles")) {
      if (space.dimension() != 2) throw LoadError("circle nets need dimension 2");
      nets = circle_nets(n_max, step, get<int>(b, "angles", "nets.balls"));
    } else {
      nets = hilbert_ball_nets(space, n_max, step);
    }
  }
  if (get_or<bool>(b, "exact", false, "nets.balls")) nets.mesh = 0.0;
  if (b.contains("mesh")) nets.mesh = get<double>(b, "mesh", "nets.balls");
  return nets;
}

inline void apply_moduli(auto& a, const json& root) {
  if (!root.contains("moduli")) return;
  for (const auto& m : root.at("moduli")) {
    const auto pred = get<std::string>(m, "predicate", "moduli");
    const int slot = get_or<int>(m, "slot", 0, "moduli");
    if (slot != 0) throw LoadError("moduli: only the G-slot of circ is configurable (ball slots follow from the space)");
    const Modulus mod = parse_modulus(need(m, "modulus", "moduli"), "moduli.modulus");
    if (pred == "circ") {
      a.set_group_modulus([mod](int, int) { return mod; });
      continue;
    }
    int mm = 0, nn = 0;
    if (!detail::parse_index_pair(pred, "circ", mm, nn)) throw LoadError("moduli: unknown predicate '" + pred + "'");
    a.set_group_modulus(mm, nn, mod);
  }
}

/// Shortest-word names ("e", "r", "r*s^-1") for the elements of a word group, in its BFS order.
template <GeodesicSpace S>
std::vector<std::string> word_names(const S& space, const std::vector<typename S::Isometry>& elems,
                                    const std::vector<typename S::Isometry>& gens, const std::vector<std::string>& gen_names) {
  std::vector<typename S::Isometry> letters = gens;
  std::vector<std::string> letter_names = gen_names;
  for (std::size_t i = 0; i < gens.size(); ++i) {
    letters.push_back(space.inverse(gens[i]));
    letter_names.push_back(gen_names[i] + "^-1");
  }
  std::vector<std::string> names(elems.size());
  names[0] = "e";
  for (std::size_t i = 1; i < elems.size(); ++i) {
    for (std::size_t j = 0; j < i && names[i].empty(); ++j) {
      for (std::size_t l = 0; l < letters.size(); ++l) {
        if (same_isometry(space, space.compose(elems[j], letters[l]), elems[i])) {
          names[i] = j == 0 ? letter_names[l] : names[j] + "*" + letter_names[l];
          break;
        }
      }
    }
  }
  return names;
}

template <GeodesicSpace S>
ActionStructure<S> build_action(const S& space, std::optional<MetricGroup> plain, const json& root) {
  using Iso = typename S::Isometry;
  const std::string where = "action";
  const auto& act = need(root, "action", "structure");
  const int n_max = get<int>(act, "n_max", where);
  std::function<Iso(Handle)> rho;
  MetricGroup group = MetricGroup::integers(0, 0);
  const auto& gj = root.at("group");
  if (!plain) {
    const auto gens_names = get<std::vector<std::string>>(gj, "generators", "group");
    const auto& gmap = need(act, "generators", where);
    std::vector<Iso> gens;
    for (const auto& name : gens_names) gens.push_back(parse_isometry(space, need(gmap, name.c_str(), "action.generators")));
    std::vector<Iso> elems;
    group = MetricGroup::words(
        space.identity(), gens, [space](const Iso& x, const Iso& y) { return space.compose(x, y); },
        [space](const Iso& x) { return space.inverse(x); }, [space](const Iso& x, const Iso& y) { return same_isometry(space, x, y); },
        get<int>(gj, "cap", "group"), get<int>(gj, "product_cap", "group"), &elems);
    group.set_names(word_names(space, elems, gens, gens_names));
    rho = [elems](Handle h) { return elems.at(static_cast<std::size_t>(h)); };
  } else if (plain->backend() == MetricGroup::Backend::integers) {
    group = *plain;
    std::map<Handle, Iso> overrides;
    if (act.contains("elements")) {
      for (const auto& [name, iso] : act.at("elements").items()) {
        const auto h = group.find_name(name);
        if (!h) throw LoadError("action.elements: '" + name + "' is not an integer");
        overrides[*h] = parse_isometry(space, iso);
      }
    }
    std::optional<Iso> gen;
    if (act.contains("generators")) gen = parse_isometry(space, need(act.at("generators"), "1", "action.generators"));
    for (Handle h : group.carrier()) {
      if (!overrides.contains(h) && !gen && h != 0) throw LoadError("action: no isometry for element " + std::to_string(h));
    }
    rho = [space, overrides, gen](Handle h) {
      auto it = overrides.find(h);
      if (it != overrides.end()) return it->second;
      Iso out = space.identity();
      if (!gen) return out;
      const Iso step = h >= 0 ? *gen : space.inverse(*gen);
      for (Handle k = 0; k < (h >= 0 ? h : -h); ++k) out = space.compose(out, step);
      return out;
    };
  } else {
    group = *plain;
    const auto& emap = need(act, "elements", where);
    std::map<Handle, Iso> elems;
    for (Handle h : group.carrier()) elems[h] = parse_isometry(space, need(emap, group.name(h).c_str(), "action.elements"));
    rho = [elems](Handle h) {
      auto it = elems.find(h);
      if (it == elems.end()) throw ActionError("element outside the carrier");
      return it->second;
    };
  }
  ActionStructure<S> a(std::move(group), space, std::move(rho), parse_gth(act), parse_nets(space, need(root, "nets", "structure"), n_max),
                       n_max);
  if constexpr (std::is_same_v<S, HilbertSpace>) {
    if (act.contains("ort")) {
      const auto& o = act.at("ort");
      if (o == "identity") {
        a.set_ort([](int m) { return m; });
      } else if (o.is_array()) {
        const auto vals = o.get<std::vector<int>>();
        a.set_ort([vals](int m) {
          if (m < 1 || m > static_cast<int>(vals.size())) throw ActionError("ort value not listed for m=" + std::to_string(m));
          return vals[static_cast<std::size_t>(m - 1)];
        });
      } else if (o != "computed") {
        throw LoadError("action.ort must be \"computed\", \"identity\" or a list");
      }
    }
    if (get_or<bool>(act, "preserves_balls", false, where)) a.set_preserves_balls(true);
  }
  apply_moduli(a, root);
  return a;
}

inline ActionStructure<HilbertSpace> build_unitary(MetricGroup group, const json& root) {
  const auto& act = root.at("action");
  const int n_max = get<int>(act, "n_max", "action");
  UnitaryRep rep;
  for (const auto& m : need(act, "unitary", "action")) {
    const auto rows = m.get<std::vector<std::vector<std::vector<double>>>>();
    const auto d = static_cast<Eigen::Index>(rows.size());
    CMat u(d, d);
    for (Eigen::Index r = 0; r < d; ++r) {
      if (static_cast<Eigen::Index>(rows[static_cast<std::size_t>(r)].size()) != d) throw LoadError("unitary matrix is not square");
      for (Eigen::Index c = 0; c < d; ++c) {
        const auto& z = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
        if (z.size() != 2) throw LoadError("matrix entries are [re, im] pairs");
        u(r, c) = {z[0], z[1]};
      }
    }
    rep.matrices.push_back(u);
  }
  if (rep.matrices.size() != group.carrier().size()) throw LoadError("action.unitary needs one matrix per group element");
  const HilbertSpace h(2 * rep.dimension(), true);
  auto a = unitary_action(std::move(group), rep, parse_nets(h, need(root, "nets", "structure"), n_max), n_max);
  apply_moduli(a, root);
  return a;
}

inline GreyGroup parse_grey(const MetricGroup& g, const json& j) {
  if (j.contains("V")) {
    std::vector<Handle> v;
    for (const auto& name : j.at("V")) {
      const auto h = g.find_name(name.is_string() ? name.get<std::string>() : name.dump());
      if (!h || !g.in_carrier(*h)) throw LoadError("grey.V: unknown element " + name.dump());
      v.push_back(*h);
    }
    return grey_from_set(g, v, get_or<double>(j, "scale", 0.5, "grey"));
  }
  auto table = [&](const char* key) {
    std::map<Handle, double> t;
    for (const auto& [name, value] : need(j, key, "grey").items()) {
      const auto h = g.find_name(name);
      if (!h) throw LoadError(std::string("grey.") + key + ": unknown element '" + name + "'");
      t[*h] = value.get<double>();
    }
    for (Handle h : g.carrier()) {
      if (!t.contains(h)) throw LoadError(std::string("grey.") + key + ": no value for element " + g.name(h));
    }
    return [t](Handle h) {
      auto it = t.find(h);
      if (it == t.end()) throw EvalError("grey table has no value for this element");
      return it->second;
    };
  };
  return GreyGroup{g, table("P"), table("Q")};
}

inline void add_grey_predicates(Structure& s, const GreyGroup& gg) {
  auto P = gg.P;
  auto Q = gg.Q;
  s.add_predicate({{"P", {"G"}, {0.0, 1.0}}, [P](std::span<const Handle> a) { return P(a[0]); }, {}});
  s.add_predicate({{"Q", {"G"}, {0.0, 1.0}}, [Q](std::span<const Handle> a) { return Q(a[0]); }, {}});
  s.register_modulus("P", 0, Modulus::identity());
  s.register_modulus("Q", 0, Modulus::identity());
}

}  // namespace io

/// Builds a structure from the JSON interchange format (see docs/structure-schema.md).
inline LoadedStructure load_structure(const json& root) {
  if (!root.is_object()) throw LoadError("structure file must hold a JSON object");
  const int version = io::get_or<int>(root, "version", kSchemaVersion, "structure");
  if (version != kSchemaVersion) throw LoadError("unsupported schema version " + std::to_string(version));
  LoadedStructure out;
  try {
    const auto& gj = io::need(root, "group", "structure");
    auto plain = io::parse_plain_group(gj);
    const double group_mesh = root.contains("nets") ? io::get_or<double>(root.at("nets"), "group_mesh", 0.0, "nets") : 0.0;
    if (root.contains("space")) {
      const auto& sj = root.at("space");
      out.space_kind = io::get<std::string>(sj, "kind", "space");
      if (out.space_kind == "line") {
        out.action = io::build_action(Line{}, plain, root);
      } else if (out.space_kind == "finite_tree") {
        std::vector<FiniteTree::Edge> edges;
        for (const auto& e : io::need(sj, "edges", "space")) {
          const auto v = e.get<std::vector<double>>();
          if (v.size() != 3) throw LoadError("space.edges entries are [u, v, length]");
          edges.push_back({static_cast<int>(v[0]), static_cast<int>(v[1]), v[2]});
        }
        const FiniteTree t(io::get<int>(sj, "vertices", "space"), edges, io::get_or<int>(sj, "basepoint", 0, "space"));
        out.action = io::build_action(t, plain, root);
      } else if (out.space_kind == "hilbert") {
        if (io::need(root, "action", "structure").contains("unitary")) {
          if (!plain) throw LoadError("unitary actions need an explicit finite group");
          out.action = io::build_unitary(*plain, root);
        } else {
          const int dim = io::get<int>(sj, "dimension", "space");
          if (dim < 1 || dim > kMaxHilbertDimension) throw LoadError("space.dimension out of range");
          out.action = io::build_action(HilbertSpace(dim), plain, root);
        }
      } else {
        throw LoadError("space: unknown kind '" + out.space_kind + "'");
      }
      std::visit([&](const auto& a) {
        out.group = a.group();
        out.logic = expose_predicates(a, {}, group_mesh);
      }, *out.action);
    } else {
      if (!plain) throw LoadError("word groups need a space and generator isometries");
      out.group = *plain;
      add_group_sort(out.logic, out.group, "G", group_mesh);
    }
    if (root.contains("grey")) {
      out.grey = io::parse_grey(out.group, root.at("grey"));
      io::add_grey_predicates(out.logic, *out.grey);
    }
  } catch (const json::exception& e) {
    throw LoadError(std::string("malformed structure file: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw LoadError(e.what());
  }
  return out;
}

inline LoadedStructure load_structure_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open structure file '" + path.string() + "'");
  json root;
  try {
    root = json::parse(in);
  } catch (const json::parse_error& e) {
    throw LoadError("'" + path.string() + "' is not valid JSON: " + e.what());
  }
  return load_structure(root);
}

// ---------------------------------------------------------------------------------------------
// Report records

inline json to_json(const Bracket& b) { return {{"lo", b.lo}, {"hi", b.hi}}; }

inline json record(const std::string& kind) { return {{"version", kSchemaVersion}, {"record", kind}}; }

inline json to_json(const InstanceResult& r, const std::string& scheme) {
  json j = record("instance");
  j["scheme"] = scheme;
  j["axiom"] = r.instance.axiom;
  json idx = json::object();
  for (const auto& [k, v] : r.instance.indices) idx[k] = v;
  j["indices"] = idx;
  j["condition"] = format_condition(r.instance.condition);
  j["residual"] = to_json(r.residual);
  j["verdict"] = std::string(to_string(r.verdict));
  return j;
}

inline json to_json(const ModulusVerdict& v) {
  json j = record("modulus");
  j["predicate"] = v.predicate;
  j["slot"] = v.slot;
  j["modulus"] = v.modulus;
  j["samples"] = v.samples;
  j["seed"] = v.seed;
  j["worst_eps"] = v.worst_eps;
  j["worst_jump"] = v.worst_jump;
  j["worst_ratio"] = v.worst_ratio;
  j["witness"] = v.witness;
  j["verdict"] = std::string(to_string(v.verdict));
  return j;
}

inline json to_json(const SubstructureResult& r) {
  json j = record("substructure");
  j["eps"] = r.eps;
  j["rounds"] = r.rounds;
  j["seed_points"] = r.seed;
  j["selection"] = r.selection;
  json gaps = json::array();
  for (const auto& g : r.gaps) {
    gaps.push_back({{"formula", g.formula}, {"full", to_json(g.full)}, {"sub", to_json(g.sub)}, {"gap", g.gap}, {"binders", g.binders}});
  }
  j["gaps"] = gaps;
  return j;
}

}  // namespace contlog
