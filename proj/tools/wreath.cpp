// wreath: command-line front end for groups defined by wreath recursions.
//
// Exit status: 0 all checks pass, 1 some check fails, 2 usage, parse or
// internal error.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "wreath/cache.hpp"
#include "wreath/filtration.hpp"
#include "wreath/report.hpp"
#include "wreath/suite.hpp"

namespace {

using namespace wreath;
using json = nlohmann::ordered_json;

struct Global {
  std::size_t max_level = 10;
  std::size_t point_cap = 1024;
  std::size_t state_cap = 100000;
  std::size_t jobs = 1;
  std::string format = "text";
  std::string cache_dir;

  Limits limits() const { return Limits{state_cap, point_cap, max_level}; }

  std::shared_ptr<QuotientCache> cache() const {
    if (cache_dir.empty()) {
      return nullptr;
    }
    return std::make_shared<QuotientCache>(cache_dir, [](const std::string& w) {
      std::cerr << "warning: " << w << "\n";
    });
  }
};

std::shared_ptr<Session> open(const Global& g, const std::string& file) {
  return open_group(file, g.limits(), g.cache());
}

/// Deepest level whose quotient fits the caps.
std::size_t deepest_level(const Session& s) {
  std::size_t n = 0;
  while (n < s.limits().max_level && checked_power(s.degree(), n + 1, s.limits().point_cap) <= s.limits().point_cap) {
    ++n;
  }
  return n;
}

/// Name of an element when it equals 1, a generator or a generator's inverse.
std::string describe(const Session& s, const Element& e) {
  if (is_identity(e)) {
    return "1";
  }
  for (const GenDecl& g : s.definition().generators) {
    const Element& x = s.resolution().at(g.name);
    if (equal(e, x, s.limits())) {
      return g.name;
    }
    if (equal(e, inverse(x), s.limits())) {
      return g.name + "^-1";
    }
  }
  return "<" + std::to_string(normal_form(e).machine().size()) + "-state element>";
}

int cmd_parse(const Global& g, const std::string& file) {
  auto s = open(g, file);
  const GroupDefinition& d = s->definition();
  if (g.format == "json") {
    json j;
    j["degree"] = d.degree;
    j["generators"] = json::array();
    for (const GenDecl& x : d.generators) {
      j["generators"].push_back({{"name", x.name}, {"body", to_string(*x.body)}});
    }
    j["subgroups"] = json::array();
    for (const SubDecl& x : d.subgroups) {
      j["subgroups"].push_back({{"name", x.name}, {"body", to_string(*x.body)}});
    }
    j["source_hash"] = d.source_hash;
    j["content_hash"] = s->hash();
    j["states"] = s->resolution().raw_state_count;
    std::cout << j.dump(2) << "\n";
  } else {
    std::cout << pretty_print(d);
    std::cout << "# states " << s->resolution().raw_state_count << "\n";
    std::cout << "# content hash " << s->hash() << "\n";
  }
  return 0;
}

int cmd_eval(const Global& g, const std::string& file, const std::string& expr,
             std::optional<std::size_t> level, std::optional<std::size_t> depth, bool subgroup,
             bool machine) {
  auto s = open(g, file);
  if (subgroup) {
    const std::size_t n = level.value_or(deepest_level(*s));
    PermGroup h = s->eval(expr, n);
    json j = to_json(h);
    j["level"] = n;
    j["index"] = to_string(index(s->level_quotient(n)->quotient, h));
    if (g.format == "json") {
      std::cout << j.dump(2) << "\n";
    } else {
      std::cout << "level " << n << " order " << j["order"].get<std::string>() << " index "
                << j["index"].get<std::string>() << " backend " << j["backend"].get<std::string>() << "\n";
    }
    return 0;
  }
  Element e = s->element(expr);
  json j;
  j["expression"] = to_string(*parse_element(expr, s->definition()));
  if (level) {
    j["level"] = *level;
    j["permutation"] = s->truncation(e, *level).cycles();
  } else {
    const std::size_t dep = depth.value_or(1);
    j["portrait"] = portrait(e, dep).serialize();
    std::vector<std::string> secs;
    for (std::size_t x = 1; x <= s->degree(); ++x) {
      secs.push_back(describe(*s, section(e, Vertex{x})));
    }
    j["root"] = e.root_permutation().cycles();
    j["sections"] = secs;
  }
  if (machine) {
    j["machine"] = serialize(e);
  }
  if (g.format == "json") {
    std::cout << j.dump(2) << "\n";
    return 0;
  }
  if (level) {
    std::cout << j["permutation"].get<std::string>() << "\n";
    return 0;
  }
  std::cout << j["portrait"].get<std::string>();
  std::cout << "sections (";
  const auto& secs = j["sections"];
  for (std::size_t i = 0; i < secs.size(); ++i) {
    std::cout << (i ? ", " : "") << secs[i].get<std::string>();
  }
  std::cout << ") root " << j["root"].get<std::string>() << "\n";
  if (machine) {
    std::cout << j["machine"].get<std::string>();
  }
  return 0;
}

struct CheckArgs {
  std::vector<std::string> positional;
  std::string levels;
  std::string expect;
  std::size_t depth = 0;
  std::string in;
  std::string mode;
  std::string coords;
  std::string relation;
  std::string of;
  std::string modulo;
  std::string klass;
  std::string indices;
  std::vector<std::string> l_gens;
};

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string part;
  while (std::getline(ss, part, sep)) {
    out.push_back(part);
  }
  return out;
}

YAML::Node check_node(const std::string& kind, const CheckArgs& a) {
  YAML::Node n;
  std::string id = kind;
  for (const std::string& p : a.positional) {
    id += " " + p;
  }
  n["id"] = id;
  n["kind"] = kind;
  auto pos = [&](std::size_t i, const char* what) {
    if (i >= a.positional.size()) {
      throw SuiteError(kind + " needs argument <" + what + ">");
    }
    return a.positional[i];
  };
  auto want_positional = [&](std::size_t count) {
    if (a.positional.size() != count) {
      throw SuiteError(kind + " takes " + std::to_string(count) + " positional arguments");
    }
  };
  auto set_levels = [&] {
    if (a.levels.empty()) {
      throw SuiteError(kind + " needs --n");
    }
    if (a.levels.find("..") != std::string::npos) {
      n["levels"] = a.levels;
    } else if (a.levels.find(',') != std::string::npos) {
      for (const std::string& l : split(a.levels, ',')) {
        n["levels"].push_back(l);
      }
    } else {
      n["level"] = a.levels;
    }
  };
  auto set_expect = [&] {
    if (a.expect.empty()) {
      return;
    }
    if (a.expect.find(',') != std::string::npos) {
      for (const std::string& e : split(a.expect, ',')) {
        n["expect"].push_back(e);
      }
    } else {
      n["expect"] = a.expect;
    }
  };
  if (kind == "equal") {
    want_positional(2);
    if (a.levels.empty()) {
      n["lhs"] = pos(0, "lhs");
      n["rhs"] = pos(1, "rhs");
    } else {
      n["subgroups"].push_back(pos(0, "lhs"));
      n["subgroups"].push_back(pos(1, "rhs"));
      set_levels();
    }
    set_expect();
  } else if (kind == "coset_member") {
    want_positional(2);
    n["element"] = pos(0, "element");
    n["subgroup"] = pos(1, "subgroup");
    set_levels();
    set_expect();
  } else if (kind == "quotient_index") {
    want_positional(1);
    n["subgroup"] = pos(0, "subgroup");
    if (!a.in.empty()) {
      n["in"] = a.in;
    }
    set_levels();
    set_expect();
  } else if (kind == "congruence_scan") {
    want_positional(1);
    n["subgroup"] = pos(0, "subgroup");
    n["max_level"] = a.depth;
    n["expect"] = a.expect;
  } else if (kind == "theorem1") {
    want_positional(2);
    n["R"] = pos(0, "R");
    n["H"] = pos(1, "H");
    n["depth"] = a.depth;
    for (const std::string& l : a.l_gens) {
      n["L"].push_back(l);
    }
    set_expect();
  } else if (kind == "profile") {
    want_positional(2);
    n["element"] = pos(0, "element");
    n["subgroup"] = pos(1, "subgroup");
    if (!a.mode.empty()) {
      n["mode"] = a.mode;
    }
    if (!a.coords.empty()) {
      for (const std::string& c : split(a.coords, ',')) {
        n["coords"].push_back(c);
      }
    }
    set_levels();
    if (a.mode.empty() || a.mode == "sections") {
      for (const std::string& e : split(a.expect, ',')) {
        n["expect"].push_back(e);
      }
    } else {
      n["expect"] = a.expect;
    }
  } else if (kind == "rist_evidence") {
    want_positional(2);
    n["rist"] = pos(0, "rist");
    n["subgroup"] = pos(1, "subgroup");
    if (!a.relation.empty()) {
      n["relation"] = a.relation;
    }
    set_levels();
    set_expect();
  } else if (kind == "series_order") {
    want_positional(0);
    if (!a.of.empty()) {
      n["of"] = a.of;
    }
    if (!a.modulo.empty()) {
      n["modulo"] = a.modulo;
    }
    if (!a.klass.empty()) {
      n["class"] = a.klass;
    }
    if (!a.indices.empty()) {
      for (const std::string& i : split(a.indices, ',')) {
        n["indices"].push_back(i);
      }
    }
    set_levels();
  } else {
    throw SuiteError("unknown check kind '" + kind + "'");
  }
  return n;
}

int print_report(const Global& g, const RunReport& rep) {
  if (g.format == "json") {
    std::cout << to_json(rep).dump(2) << "\n";
  } else if (g.format == "csv") {
    std::cout << to_csv(rep);
  } else {
    std::cout << to_text(rep);
  }
  return rep.exit_code();
}

int cmd_check(const Global& g, const std::string& file, std::string kind, const CheckArgs& a) {
  for (char& c : kind) {
    if (c == '-') {
      c = '_';
    }
  }
  if (kind == "scan") {
    kind = "congruence_scan";
  }
  auto s = open(g, file);
  Check c = make_check(check_node(kind, a), *s);
  RunReport rep;
  rep.suite = "-";
  rep.group = file;
  rep.definition_hash = s->hash();
  rep.checks.push_back(run_check(c, *s));
  rep.seconds = rep.checks.back().seconds;
  return print_report(g, rep);
}

int cmd_verify(const Global& g, const std::vector<std::string>& suites) {
  std::vector<RunReport> reports;
  for (const std::string& path : suites) {
    auto cache = g.cache();
    Suite suite = load_suite(path, g.limits(), cache);
    reports.push_back(run_suite(suite, g.jobs));
    if (cache) {
      std::cerr << "cache: " << cache->hits() << " hits, " << cache->misses() << " misses\n";
    }
  }
  int worst = 0;
  for (const RunReport& r : reports) {
    worst = std::max(worst, r.exit_code());
  }
  // Several suites: one JSON array, or one CSV table with a leading suite column.
  if (reports.size() == 1) {
    print_report(g, reports.front());
  } else if (g.format == "json") {
    json all = json::array();
    for (const RunReport& r : reports) {
      all.push_back(to_json(r));
    }
    std::cout << all.dump(2) << "\n";
  } else if (g.format == "csv") {
    for (std::size_t i = 0; i < reports.size(); ++i) {
      std::istringstream rows(to_csv(reports[i]));
      std::string line;
      std::getline(rows, line);
      if (i == 0) {
        std::cout << "suite," << line << "\n";
      }
      while (std::getline(rows, line)) {
        std::cout << csv_field(reports[i].suite) << ',' << line << "\n";
      }
    }
  } else {
    for (const RunReport& r : reports) {
      std::cout << to_text(r);
    }
  }
  return worst;
}

int cmd_quotient(const Global& g, const std::string& file, std::optional<std::size_t> level) {
  auto s = open(g, file);
  const std::size_t n = level.value_or(deepest_level(*s));
  auto ctx = s->level_quotient(n);
  json j = to_json(ctx->quotient);
  j["level"] = n;
  j["points"] = ctx->points;
  json table = json::object();
  for (const auto& [name, p] : ctx->element_table) {
    table[name] = p.cycles();
  }
  j["element_table"] = table;
  if (g.format == "json") {
    std::cout << j.dump(2) << "\n";
    return 0;
  }
  std::cout << "level " << n << " on " << ctx->points << " points\n";
  std::cout << "order " << j["order"].get<std::string>() << " (" << j["backend"].get<std::string>() << ")\n";
  for (const auto& [name, p] : ctx->element_table) {
    std::cout << name << " = " << p.cycles() << "\n";
  }
  const auto sizes = ctx->quotient.transversal_sizes();
  std::cout << "base length " << sizes.size() << "\n";
  return 0;
}

int cmd_scan(const Global& g, const std::string& file, const std::string& expr, std::optional<std::size_t> depth) {
  auto s = open(g, file);
  const std::size_t m = depth.value_or(deepest_level(*s));
  ScanReport r = s->congruence_scan(*s->subgroup(expr), m);
  if (g.format == "json") {
    std::cout << to_json(r).dump(2) << "\n";
    return 0;
  }
  std::cout << r.target << ": " << r.verdict();
  if (r.found) {
    std::cout << (r.exact ? " (by construction)" : ", verified up to level " + std::to_string(m));
  }
  std::cout << "\n";
  for (const LevelFact& f : r.facts) {
    std::cout << "  st(" << f.n << ") at level " << f.level << ": "
              << (f.contained ? "contained" : "escapes via " + f.escaping->cycles()) << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Exact computations with groups of rooted-tree automorphisms"};
  app.require_subcommand(1);
  app.fallthrough();
  Global g;
  app.add_option("--max-level", g.max_level, "Deepest level a quotient may be built at")->envname("WREATH_MAX_LEVEL");
  app.add_option("--point-cap", g.point_cap, "Largest number of leaves in a quotient")->envname("WREATH_POINT_CAP");
  app.add_option("--state-cap", g.state_cap, "Largest product machine before minimization")->envname("WREATH_STATE_CAP");
  app.add_option("--jobs", g.jobs, "Worker threads for suites")->envname("WREATH_JOBS");
  app.add_option("--format", g.format, "Output format")
      ->check(CLI::IsMember({"text", "json", "csv"}))
      ->envname("WREATH_FORMAT");
  app.add_option("--cache-dir", g.cache_dir, "Directory for cached level quotients")->envname("WREATH_CACHE_DIR");

  std::string file;
  std::string expr;
  std::optional<std::size_t> level;
  std::optional<std::size_t> portrait_depth;
  bool as_subgroup = false;
  bool machine = false;

  auto* parse_cmd = app.add_subcommand("parse", "Parse a group file and print its canonical form");
  parse_cmd->add_option("file", file, "Group definition (.grp)")->required();

  auto* eval_cmd = app.add_subcommand("eval", "Evaluate an element or subgroup expression");
  eval_cmd->add_option("file", file)->required();
  eval_cmd->add_option("expr", expr)->required();
  eval_cmd->add_option("--level", level, "Print the truncation to this level");
  eval_cmd->add_option("--portrait", portrait_depth, "Portrait depth (default 1)");
  eval_cmd->add_flag("--subgroup", as_subgroup, "Treat the expression as a subgroup");
  eval_cmd->add_flag("--machine", machine, "Also print the minimized machine");

  std::string kind;
  CheckArgs ca;
  auto* check_cmd = app.add_subcommand("check", "Run a single check");
  check_cmd->add_option("file", file)->required();
  check_cmd->add_option("kind", kind, "equal, coset-member, quotient-index, scan, theorem1, profile, rist-evidence, series-order")
      ->required();
  // Two scalar positionals rather than a vector: vector options split "[x,y]" into a list.
  std::optional<std::string> arg1;
  std::optional<std::string> arg2;
  check_cmd->add_option("arg1", arg1, "First expression");
  check_cmd->add_option("arg2", arg2, "Second expression");
  check_cmd->add_option("--n,--levels", ca.levels, "Level, list a,b,c or range a..b");
  check_cmd->add_option("--expect", ca.expect);
  check_cmd->add_option("--depth", ca.depth, "Scan or hypothesis depth");
  check_cmd->add_option("--in", ca.in, "Ambient subgroup for quotient-index");
  check_cmd->add_option("--mode", ca.mode, "profile: sections, product or pullback");
  check_cmd->add_option("--coords", ca.coords);
  check_cmd->add_option("--relation", ca.relation, "rist-evidence: equal, contains, contained, branch or pullback");
  check_cmd->add_option("--of", ca.of);
  check_cmd->add_option("--modulo", ca.modulo);
  check_cmd->add_option("--class", ca.klass);
  check_cmd->add_option("--indices", ca.indices);
  check_cmd->add_option("--L", ca.l_gens, "Generators of the pullback subgroup")->allow_extra_args(false);

  std::vector<std::string> suites;
  auto* verify_cmd = app.add_subcommand("verify", "Run verification suites");
  verify_cmd->add_option("suites", suites)->required();

  auto* quotient_cmd = app.add_subcommand("quotient", "Build a level quotient");
  quotient_cmd->add_option("file", file)->required();
  quotient_cmd->add_option("--level", level);

  std::optional<std::size_t> depth;
  auto* scan_cmd = app.add_subcommand("scan", "Search for a level stabilizer inside a subgroup");
  scan_cmd->add_option("file", file)->required();
  scan_cmd->add_option("subgroup", expr)->required();
  scan_cmd->add_option("--depth", depth, "Deepest level to check");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*parse_cmd) {
      return cmd_parse(g, file);
    }
    if (*eval_cmd) {
      return cmd_eval(g, file, expr, level, portrait_depth, as_subgroup, machine);
    }
    if (*check_cmd) {
      for (const auto& a : {arg1, arg2}) {
        if (a) {
          ca.positional.push_back(*a);
        }
      }
      return cmd_check(g, file, kind, ca);
    }
    if (*verify_cmd) {
      return cmd_verify(g, suites);
    }
    if (*quotient_cmd) {
      return cmd_quotient(g, file, level);
    }
    if (*scan_cmd) {
      return cmd_scan(g, file, expr, depth);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
