#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "contlog/contlog.hpp"

using namespace contlog;

namespace {

constexpr int kHolds = 0;
constexpr int kFails = 1;
constexpr int kInconclusive = 2;
constexpr int kError = 3;

struct Common {
  std::string structure;
  std::string format = "text";
  double tol = 1e-6;
  bool force = false;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--structure", c.structure, "structure file (JSON)")->required();
  cmd->add_option("--tol", c.tol, "verdict tolerance")->check(CLI::PositiveNumber);
  cmd->add_option("--format", c.format, "text or structured")->check(CLI::IsMember({"text", "structured"}));
  cmd->add_flag("--force", c.force, "skip structure validation");
}

int exit_code(Verdict v) {
  switch (v) {
    case Verdict::holds: return kHolds;
    case Verdict::fails: return kFails;
    case Verdict::inconclusive: return kInconclusive;
  }
  return kInconclusive;
}

std::string num(double v) { return detail::format_number(v); }
std::string bracket(const Bracket& b) { return "[" + num(b.lo) + ", " + num(b.hi) + "]"; }

void emit(const json& j) { std::cout << j.dump() << '\n'; }

LoadedStructure load(const Common& c) {
  LoadedStructure ls = load_structure_file(c.structure);
  if (!c.force) {
    const GroupReport r = validate_group(ls.group, c.tol);
    if (!r.ok()) {
      const auto& v = r.violations.front();
      throw LoadError("group fails validation (" + v.axiom + " at " + v.witness + "); use --force to skip");
    }
  }
  return ls;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

// check-axioms

struct SchemeOptions {
  std::string scheme;
  int m_max = 0;
  int n_max = 0;
  int k_max = 1;
  std::vector<double> deltas{0.25, 0.5};
  std::vector<double> eps{0.25, 0.5};
  int s = 1;
};

SchemeParams scheme_params(const SchemeOptions& o, const LoadedStructure& ls) {
  SchemeParams p;
  const auto id = scheme_from_string(o.scheme);
  if (!id) throw SchemeError("unknown scheme '" + o.scheme + "'");
  p.id = *id;
  int n_default = 1;
  if (ls.action) std::visit([&](const auto& a) { n_default = a.n_max(); }, *ls.action);
  p.m_max = o.m_max > 0 ? o.m_max : n_default;
  p.n_max = o.n_max > 0 ? o.n_max : n_default;
  p.k_max = o.k_max;
  p.deltas = o.deltas;
  p.eps = o.eps;
  p.s = o.s;
  if (ls.action) {
    std::visit([&](const auto& a) {
      p.gth = [&a](int m, double d) { return a.gth(m, d); };
      p.ort = [&a](int m) { return a.ort(m); };
    }, *ls.action);
  }
  return p;
}

int cmd_check_axioms(const Common& c, const SchemeOptions& o) {
  const LoadedStructure ls = load(c);
  const SchemeParams p = scheme_params(o, ls);
  const SchemeReport r = check_scheme(ls.logic, p, c.tol);
  if (c.format == "structured") {
    for (const auto& x : r.results) emit(to_json(x, r.scheme));
    json s = record("summary");
    s["command"] = "check-axioms";
    s["scheme"] = r.scheme;
    s["instances"] = r.results.size();
    s["verdict"] = std::string(to_string(r.overall));
    emit(s);
  } else {
    for (const auto& x : r.results) {
      std::cout << to_string(x.verdict) << "  " << x.instance.axiom << ' ' << x.instance.index_string() << "  residual "
                << bracket(x.residual) << '\n';
    }
    std::cout << r.scheme << ": " << to_string(r.overall) << " (" << r.results.size() << " instances)\n";
    if (const auto* f = r.first_failure()) {
      std::cout << "first failing instance: " << f->instance.axiom << ' ' << f->instance.index_string() << "  residual "
                << bracket(f->residual) << "\n  " << format_condition(f->instance.condition) << '\n';
    }
  }
  return exit_code(r.overall);
}

// eval

int cmd_eval(const Common& c, const std::string& formula, const std::string& file, std::optional<double> eps) {
  const LoadedStructure ls = load(c);
  std::vector<std::pair<std::string, Condition>> conds;
  const Signature& sig = ls.logic.signature();
  if (!formula.empty()) {
    if (eps) {
      conds.emplace_back(formula, Condition::at_most(parse_formula(formula, sig), *eps));
    } else {
      conds.emplace_back(formula, parse_condition(formula, sig));
    }
  }
  if (!file.empty()) {
    for (auto& line : parse_condition_file(read_file(file), &sig)) conds.emplace_back(line.text, std::move(line.condition));
  }
  if (conds.empty()) throw LoadError("eval needs --formula or --formula-file");
  Verdict overall = Verdict::holds;
  for (const auto& [text, cond] : conds) {
    const ConditionResult r = check_condition(cond, ls.logic, c.tol);
    overall = conjoin(overall, r.verdict);
    if (c.format == "structured") {
      json j = record("eval");
      j["condition"] = format_condition(cond);
      j["value"] = to_json(r.value);
      j["residual"] = to_json(r.residual);
      j["verdict"] = std::string(to_string(r.verdict));
      emit(j);
    } else {
      std::cout << to_string(r.verdict) << "  " << bracket(r.value) << "  " << format_condition(cond) << '\n';
    }
  }
  return exit_code(overall);
}

// classify

int cmd_classify(const Common& c, const std::string& element) {
  const LoadedStructure ls = load(c);
  if (!ls.action) throw LoadError("classify needs a structure with a space and an action");
  const auto h = ls.group.find_name(element);
  if (!h || !ls.group.in_carrier(*h)) throw LoadError("element '" + element + "' is not in the carrier");
  return std::visit([&](const auto& a) -> int {
    using A = std::decay_t<decltype(a)>;
    if constexpr (A::kHilbert) {
      throw LoadError("classify works on line and tree actions");
    } else {
      const auto k = classify_isometry(a.space(), a.isometry(*h), c.tol);
      const std::string point = a.space().describe(k.point);
      if (c.format == "structured") {
        json j = record("classification");
        j["element"] = element;
        j["kind"] = k.hyperbolic() ? "hyperbolic" : "elliptic";
        j["length"] = k.length;
        j[k.hyperbolic() ? "axis_point" : "fixed_point"] = point;
        emit(j);
      } else if (k.hyperbolic()) {
        std::cout << "hyperbolic ℓ=" << num(k.length) << ", axis through " << point << '\n';
      } else {
        std::cout << "elliptic, fixed " << point << '\n';
      }
      return 0;
    }
  }, *ls.action);
}

// extract

std::map<std::string, std::vector<Handle>> parse_seed(const LoadedStructure& ls, const std::vector<std::string>& specs) {
  std::map<std::string, std::vector<Handle>> seed;
  for (const auto& spec : specs) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos) throw LoadError("seed points are SORT=a,b,...: '" + spec + "'");
    const std::string sort = spec.substr(0, eq);
    if (ls.logic.find_sort(sort) < 0) throw LoadError("structure has no sort '" + sort + "'");
    auto& out = seed[sort];
    std::stringstream ss(spec.substr(eq + 1));
    for (std::string item; std::getline(ss, item, ',');) {
      if (sort == "G") {
        const auto h = ls.group.find_name(item);
        if (!h) throw LoadError("unknown group element '" + item + "'");
        out.push_back(*h);
      } else {
        try {
          out.push_back(static_cast<Handle>(std::stoll(item)));
        } catch (const std::exception&) {
          throw LoadError("point handles are integers: '" + item + "'");
        }
      }
    }
  }
  return seed;
}

int cmd_extract(const Common& c, const std::vector<std::string>& seed_specs, const std::string& fragment_file, double eps) {
  const LoadedStructure ls = load(c);
  std::vector<Formula> fragment;
  for (auto& line : parse_condition_file(read_file(fragment_file), &ls.logic.signature())) {
    fragment.push_back(std::move(line.condition.formula));
  }
  const SubstructureResult r = extract_substructure(ls.logic, fragment, parse_seed(ls, seed_specs), eps);
  if (c.format == "structured") {
    emit(to_json(r));
  } else {
    for (const auto& [sort, hs] : r.selection) {
      std::cout << "selection " << sort << ":";
      const auto& data = ls.logic.sort(sort);
      for (Handle h : hs) std::cout << ' ' << (data.describe ? data.describe(h) : std::to_string(h));
      std::cout << '\n';
    }
    for (const auto& g : r.gaps) {
      std::cout << "gap " << num(g.gap) << "  full " << bracket(g.full) << "  sub " << bracket(g.sub) << "  " << g.formula << '\n';
    }
  }
  return 0;
}

// verify-modulus

int cmd_verify_modulus(const Common& c, const std::string& predicate, int slot, const std::string& metric_sort,
                       SamplingOptions opts) {
  const LoadedStructure ls = load(c);
  const Modulus* mod = ls.logic.registry().lookup(predicate, slot);
  if (!mod) throw LoadError("no modulus registered for " + predicate + "[" + std::to_string(slot) + "]");
  opts.tol = c.tol;
  const ModulusVerdict v = verify_modulus(ls.logic, predicate, slot, *mod, opts, metric_sort);
  if (c.format == "structured") {
    emit(to_json(v));
  } else {
    std::cout << to_string(v.verdict) << "  " << v.predicate << "[" << v.slot << "] " << v.modulus << "  samples " << v.samples
              << "  seed " << v.seed << "  worst ratio " << num(v.worst_ratio) << '\n';
    if (v.verdict == Verdict::fails) std::cout << "  witness: " << v.witness << '\n';
  }
  return exit_code(v.verdict);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Continuous-logic checks for group actions on real trees and Hilbert spaces"};
  app.require_subcommand(1);

  Common common;
  SchemeOptions scheme;
  auto* check = app.add_subcommand("check-axioms", "check an axiom scheme");
  add_common(check, common);
  check->add_option("--scheme", scheme.scheme, "Kdelta, isoR, isoH, ThetaTree, ThetaHilbert, Grey, ThetaGrey, Compactness")->required();
  check->add_option("--m-max", scheme.m_max, "largest m (default: the structure's n_max)");
  check->add_option("--n-max", scheme.n_max, "largest n (default: the structure's n_max)");
  check->add_option("--k-max", scheme.k_max, "largest k");
  check->add_option("--delta-grid", scheme.deltas, "delta values")->delimiter(',');
  check->add_option("--eps-grid", scheme.eps, "epsilon values")->delimiter(',');
  check->add_option("--s", scheme.s, "s for the Theta schemes");

  std::string formula, formula_file;
  std::optional<double> eval_eps;
  auto* eval = app.add_subcommand("eval", "evaluate conditions with certified brackets");
  add_common(eval, common);
  eval->add_option("--formula", formula, "a condition, or a formula when --eps is given");
  eval->add_option("--formula-file", formula_file, "one condition per line");
  eval->add_option("--eps", eval_eps, "check formula <= eps");

  std::string element;
  auto* classify = app.add_subcommand("classify", "classify the isometry of a group element");
  add_common(classify, common);
  classify->add_option("--element", element, "element name")->required();

  std::vector<std::string> seed_points;
  std::string fragment;
  double extract_eps = 0.0;
  auto* extract = app.add_subcommand("extract", "extract a substructure preserving a fragment");
  add_common(extract, common);
  extract->add_option("--seed-points", seed_points, "SORT=a,b,... (group elements by name, points by handle)");
  extract->add_option("--fragment", fragment, "condition file whose formulas form the fragment")->required();
  extract->add_option("--eps", extract_eps, "witness slack")->check(CLI::NonNegativeNumber);

  std::string predicate, metric_sort;
  int slot = 0;
  SamplingOptions sampling;
  auto* verify = app.add_subcommand("verify-modulus", "sample a registered continuity modulus");
  add_common(verify, common);
  verify->add_option("--predicate", predicate, "predicate symbol")->required();
  verify->add_option("--slot", slot, "argument position");
  verify->add_option("--sort", metric_sort, "sort whose metric 'd' refers to");
  verify->add_option("--samples", sampling.samples, "sample budget")->check(CLI::PositiveNumber);
  verify->add_option("--seed", sampling.seed, "random seed");
  verify->add_option("--eps-grid", sampling.eps_grid, "epsilon values")->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kError;
  }

  try {
    if (*check) return cmd_check_axioms(common, scheme);
    if (*eval) return cmd_eval(common, formula, formula_file, eval_eps);
    if (*classify) return cmd_classify(common, element);
    if (*extract) return cmd_extract(common, seed_points, fragment, extract_eps);
    if (*verify) return cmd_verify_modulus(common, predicate, slot, metric_sort, sampling);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kError;
  }
  return kError;
}
