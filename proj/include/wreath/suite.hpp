#pragma once

// Declarative verification suites (YAML) and their run reports.
//
//   group: ../groups/basilica.grp
//   checks:
//     - id: b2-not-in-A-st3
//       kind: coset_member
//       element: "b^2"
//       subgroup: A
//       level: 3
//       expect: false
//
// See docs/suite-format.md for every check kind and its fields.

#include <yaml-cpp/yaml.h>

#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "json.hpp"
#include "wreath/bigcount.hpp"
#include "wreath/dsl.hpp"
#include "wreath/filtration.hpp"
#include "wreath/report.hpp"

namespace wreath {

/// Malformed suite file or check specification.
class SuiteError : public Error {
 public:
  using Error::Error;
};

struct CheckResult {
  std::string id;
  std::string kind;
  std::string verdict;  ///< pass, fail or error
  std::string observed;
  std::string expected;
  std::vector<std::size_t> levels;
  std::string detail;
  double seconds = 0;
};

struct RunReport {
  std::string suite;
  std::string group;
  std::string definition_hash;
  std::vector<CheckResult> checks;
  double seconds = 0;

  std::size_t count(std::string_view verdict) const {
    return static_cast<std::size_t>(std::count_if(
        checks.begin(), checks.end(), [&](const CheckResult& c) { return c.verdict == verdict; }));
  }
  int exit_code() const {
    if (count("error") > 0) {
      return 2;
    }
    return count("fail") > 0 ? 1 : 0;
  }
};

struct Check {
  std::string id;
  std::string kind;
  std::vector<std::size_t> levels;
  std::function<void(const Session&, CheckResult&)> run;
};

struct Suite {
  std::string path;
  std::string group_path;
  std::shared_ptr<Session> session;
  std::vector<Check> checks;
};

namespace detail {

inline std::string str_of(bool b) { return b ? "true" : "false"; }

class CheckBuilder {
 public:
  CheckBuilder(const YAML::Node& node, const Session& s) : node_(node), s_(s) {}

  Check build() {
    if (!node_.IsMap()) {
      throw SuiteError("each check must be a mapping");
    }
    check_.id = required("id");
    check_.kind = required("kind");
    allow({"id", "kind", "note"});
    const std::string& k = check_.kind;
    if (k == "equal") {
      equal();
    } else if (k == "coset_member") {
      coset_member();
    } else if (k == "quotient_index") {
      quotient_index();
    } else if (k == "congruence_scan") {
      scan();
    } else if (k == "theorem1") {
      theorem1();
    } else if (k == "profile") {
      profile();
    } else if (k == "rist_evidence") {
      rist_evidence();
    } else if (k == "series_order") {
      series_order();
    } else {
      throw error("unknown check kind '" + k + "'");
    }
    for (auto it = node_.begin(); it != node_.end(); ++it) {
      const std::string key = it->first.as<std::string>();
      if (!allowed_.count(key)) {
        throw error("unknown field '" + key + "'");
      }
    }
    return check_;
  }

 private:
  using Observe = std::function<std::string(const Session&, std::size_t)>;

  SuiteError error(const std::string& msg) const {
    return SuiteError("check '" + check_.id + "': " + msg);
  }

  void allow(std::initializer_list<const char*> keys) {
    for (const char* k : keys) {
      allowed_.insert(k);
    }
  }

  std::string required(const std::string& key) {
    allowed_.insert(key);
    YAML::Node n = node_[key];
    if (!n || !n.IsScalar()) {
      throw SuiteError((check_.id.empty() ? std::string("check") : "check '" + check_.id + "'") +
                       ": missing field '" + key + "'");
    }
    return n.Scalar();
  }

  std::optional<std::string> optional_str(const std::string& key) {
    allowed_.insert(key);
    YAML::Node n = node_[key];
    if (!n) {
      return std::nullopt;
    }
    if (!n.IsScalar()) {
      throw error("field '" + key + "' must be a scalar");
    }
    return n.Scalar();
  }

  std::size_t required_size(const std::string& key) {
    return to_size(required(key), key);
  }

  std::size_t to_size(const std::string& text, const std::string& key) const {
    if (text.empty() || text.size() > 9 || text.find_first_not_of("0123456789") != std::string::npos) {
      throw error("field '" + key + "' must be a non-negative integer");
    }
    return std::stoul(text);
  }

  bool to_bool(const YAML::Node& n, const std::string& key) const {
    bool b = false;
    if (!n.IsScalar() || !YAML::convert<bool>::decode(n, b)) {
      throw error("field '" + key + "' must be true or false");
    }
    return b;
  }

  ElemPtr elem(const std::string& key) {
    const std::string text = required(key);
    try {
      return parse_element(text, s_.definition());
    } catch (const ParseError& e) {
      throw error("field '" + key + "': " + e.what());
    }
  }

  SubPtr sub(const std::string& key) {
    return sub_text(required(key), key);
  }

  SubPtr sub_text(const std::string& text, const std::string& key) const {
    try {
      return parse_subgroup(text, s_.definition());
    } catch (const ParseError& e) {
      throw error("field '" + key + "': " + e.what());
    }
  }

  std::vector<ElemPtr> elem_list(const std::string& key) {
    allowed_.insert(key);
    YAML::Node n = node_[key];
    if (!n.IsSequence()) {
      throw error("field '" + key + "' must be a list of element expressions");
    }
    std::vector<ElemPtr> out;
    for (const YAML::Node& x : n) {
      try {
        out.push_back(parse_element(x.as<std::string>(), s_.definition()));
      } catch (const ParseError& e) {
        throw error("field '" + key + "': " + e.what());
      }
    }
    return out;
  }

  /// `level: n`, `levels: [..]` or `levels: "a..b"`.
  std::vector<std::size_t> levels() {
    allow({"level", "levels"});
    std::vector<std::size_t> out;
    if (YAML::Node n = node_["level"]) {
      out.push_back(to_size(n.Scalar(), "level"));
    } else if (YAML::Node l = node_["levels"]) {
      if (l.IsSequence()) {
        for (const YAML::Node& x : l) {
          out.push_back(to_size(x.Scalar(), "levels"));
        }
      } else {
        const std::string t = l.Scalar();
        const auto dots = t.find("..");
        if (dots == std::string::npos) {
          throw error("levels must be a list or a range 'a..b'");
        }
        const std::size_t a = to_size(t.substr(0, dots), "levels");
        const std::size_t b = to_size(t.substr(dots + 2), "levels");
        if (b < a) {
          throw error("empty level range");
        }
        for (std::size_t i = a; i <= b; ++i) {
          out.push_back(i);
        }
      }
    } else {
      throw error("missing field 'level' or 'levels'");
    }
    if (out.empty()) {
      throw error("no levels given");
    }
    return out;
  }

  /// Expected value at each level: a scalar for all, a list per level, or
  /// for integers {power: p, offset: k} meaning p^(level + k).
  std::vector<std::string> expectations(const std::vector<std::size_t>& lv, bool boolean,
                                        std::optional<std::string> fallback = std::nullopt) {
    allowed_.insert("expect");
    YAML::Node e = node_["expect"];
    auto one = [&](const YAML::Node& x) -> std::string {
      if (boolean) {
        return str_of(to_bool(x, "expect"));
      }
      if (!x.IsScalar()) {
        throw error("expected value must be a scalar");
      }
      try {
        return to_string(BigCount(x.Scalar()));
      } catch (const std::exception&) {
        throw error("expected value '" + x.Scalar() + "' is not an integer");
      }
    };
    if (!e) {
      if (!fallback) {
        throw error("missing field 'expect'");
      }
      return std::vector<std::string>(lv.size(), *fallback);
    }
    if (e.IsSequence()) {
      if (e.size() != lv.size()) {
        throw error("expect list has " + std::to_string(e.size()) + " entries for " +
                    std::to_string(lv.size()) + " levels");
      }
      std::vector<std::string> out;
      for (const YAML::Node& x : e) {
        out.push_back(one(x));
      }
      return out;
    }
    if (e.IsMap()) {
      if (boolean || !e["power"]) {
        throw error("unsupported expect mapping");
      }
      const std::size_t p = to_size(e["power"].Scalar(), "power");
      long long offset = 0;
      if (e["offset"]) {
        offset = e["offset"].as<long long>();
      }
      std::vector<std::string> out;
      for (std::size_t l : lv) {
        const long long k = static_cast<long long>(l) + offset;
        if (k < 0) {
          throw error("negative exponent in expected power");
        }
        out.push_back(to_string(big_pow(p, static_cast<std::size_t>(k))));
      }
      return out;
    }
    return std::vector<std::string>(lv.size(), one(e));
  }

  /// Runs `observe` at each level and compares with the expectations.
  void per_level(std::vector<std::size_t> lv, std::vector<std::string> expected, Observe observe) {
    check_.levels = lv;
    check_.run = [lv, expected, observe](const Session& s, CheckResult& r) {
      std::vector<std::string> got;
      bool ok = true;
      for (std::size_t i = 0; i < lv.size(); ++i) {
        got.push_back(observe(s, lv[i]));
        ok = ok && got.back() == expected[i];
      }
      auto join = [&](const std::vector<std::string>& v) {
        if (v.size() == 1) {
          return v[0];
        }
        std::string out;
        for (std::size_t i = 0; i < v.size(); ++i) {
          out += (i ? " " : "") + std::string("L") + std::to_string(lv[i]) + "=" + v[i];
        }
        return out;
      };
      r.observed = join(got);
      r.expected = join(expected);
      r.verdict = ok ? "pass" : "fail";
    };
  }

  void equal() {
    if (node_["lhs"]) {
      ElemPtr lhs = elem("lhs");
      ElemPtr rhs = elem("rhs");
      allowed_.insert("expect");
      const bool want = node_["expect"] ? to_bool(node_["expect"], "expect") : true;
      check_.run = [lhs, rhs, want](const Session& s, CheckResult& r) {
        const bool got = wreath::equal(s.element(*lhs), s.element(*rhs), s.limits());
        r.observed = str_of(got);
        r.expected = str_of(want);
        r.verdict = got == want ? "pass" : "fail";
      };
      return;
    }
    allowed_.insert("subgroups");
    YAML::Node subs = node_["subgroups"];
    if (!subs.IsSequence() || subs.size() != 2) {
      throw error("equal needs 'lhs'/'rhs' elements or a two-entry 'subgroups' list");
    }
    SubPtr a = sub_text(subs[0].as<std::string>(), "subgroups");
    SubPtr b = sub_text(subs[1].as<std::string>(), "subgroups");
    auto lv = levels();
    per_level(lv, expectations(lv, true, "true"), [a, b](const Session& s, std::size_t n) {
      return str_of(same_group(s.eval(*a, n), s.eval(*b, n)));
    });
  }

  void coset_member() {
    ElemPtr g = elem("element");
    SubPtr n_expr = sub("subgroup");
    auto lv = levels();
    per_level(lv, expectations(lv, true), [g, n_expr](const Session& s, std::size_t n) {
      return str_of(s.coset_member(s.element(*g), *n_expr, n));
    });
  }

  void quotient_index() {
    SubPtr n_expr = sub("subgroup");
    SubPtr in = optional_str("in") ? sub("in") : nullptr;
    auto lv = levels();
    per_level(lv, expectations(lv, false), [n_expr, in](const Session& s, std::size_t n) {
      if (in) {
        return to_string(index(s.eval(*in, n), s.eval(*n_expr, n)));
      }
      return to_string(s.quotient_index(*n_expr, n));
    });
  }

  void scan() {
    SubPtr target = sub("subgroup");
    const std::size_t m = required_size("max_level");
    const std::string want = required("expect");
    check_.levels = {m};
    check_.run = [target, m, want](const Session& s, CheckResult& r) {
      ScanReport rep = s.congruence_scan(*target, m);
      r.observed = rep.verdict();
      r.expected = want;
      r.verdict = r.observed == want ? "pass" : "fail";
      if (!rep.facts.empty()) {
        const LevelFact& f = rep.facts.back();
        r.detail = "st(" + std::to_string(f.n) + ") at level " + std::to_string(f.level) +
                   (f.contained ? " contained" : " escapes via " + f.escaping->cycles());
      }
    };
  }

  void theorem1() {
    SubPtr r_expr = sub("R");
    SubPtr h_expr = sub("H");
    std::optional<std::vector<ElemPtr>> l_gens;
    allowed_.insert("L");
    if (node_["L"]) {
      l_gens = elem_list("L");
    }
    const std::size_t depth = required_size("depth");
    allowed_.insert("expect");
    // expect: true/false for the whole report, or a map hypothesis id -> pass/fail/skipped.
    std::map<std::string, std::string> want;
    bool want_all = true;
    bool by_id = false;
    if (YAML::Node e = node_["expect"]) {
      if (e.IsMap()) {
        by_id = true;
        for (auto it = e.begin(); it != e.end(); ++it) {
          want[it->first.as<std::string>()] = it->second.as<std::string>();
        }
      } else {
        want_all = to_bool(e, "expect");
      }
    }
    check_.levels = {depth};
    check_.run = [=](const Session& s, CheckResult& r) {
      Theorem1Report rep = s.theorem1_check(*r_expr, *h_expr, l_gens, depth);
      std::string got;
      std::string detail;
      bool ok = true;
      for (const Hypothesis& h : rep.hypotheses) {
        const std::string st = h.skipped ? "skipped" : h.passed ? "pass" : "fail";
        got += (got.empty() ? "" : " ") + h.id + "=" + st;
        if (by_id && want.count(h.id) && want.at(h.id) != st) {
          ok = false;
        }
        if (!h.skipped && !h.passed && !h.certificates.empty()) {
          detail += (detail.empty() ? "" : "; ") + h.id + ": " + h.certificates.front();
        }
      }
      if (by_id) {
        std::string exp;
        for (const auto& [k, v] : want) {
          exp += (exp.empty() ? "" : " ") + k + "=" + v;
        }
        r.expected = exp;
      } else {
        ok = rep.passed() == want_all;
        r.expected = want_all ? "all pass" : "some fail";
      }
      r.observed = got;
      r.detail = detail;
      r.verdict = ok ? "pass" : "fail";
    };
  }

  void profile() {
    ElemPtr g = elem("element");
    SubPtr h = sub("subgroup");
    const std::string mode = optional_str("mode").value_or("sections");
    auto lv = levels();
    if (mode == "product") {
      per_level(lv, expectations(lv, true), [g, h](const Session& s, std::size_t n) {
        return str_of(s.sections_product_check(s.element(*g), *h, n));
      });
    } else if (mode == "pullback") {
      per_level(lv, expectations(lv, true), [g, h](const Session& s, std::size_t n) {
        return str_of(s.pullback_member(s.element(*g), *h, n));
      });
    } else if (mode == "sections") {
      std::vector<std::size_t> coords;
      allowed_.insert("coords");
      if (YAML::Node c = node_["coords"]) {
        for (const YAML::Node& x : c) {
          coords.push_back(to_size(x.Scalar(), "coords"));
        }
      } else {
        for (std::size_t i = 1; i <= s_.degree(); ++i) {
          coords.push_back(i);
        }
      }
      allowed_.insert("expect");
      YAML::Node e = node_["expect"];
      if (!e.IsSequence() || e.size() != coords.size()) {
        throw error("profile expect must list one boolean per coordinate");
      }
      std::string want;
      for (const YAML::Node& x : e) {
        want += (want.empty() ? "" : ",") + str_of(to_bool(x, "expect"));
      }
      per_level(lv, std::vector<std::string>(lv.size(), want),
                [g, h, coords](const Session& s, std::size_t n) {
                  std::string out;
                  for (bool b : s.section_coset_profile(s.element(*g), *h, coords, n)) {
                    out += (out.empty() ? "" : ",") + str_of(b);
                  }
                  return out;
                });
    } else {
      throw error("unknown profile mode '" + mode + "'");
    }
  }

  /// relation equal / contains / contained compares X (usually a rigid
  /// stabilizer) with S. branch embeds the generators of S, taken one quotient
  /// k levels down, below each level-k vertex and tests membership in X; k is
  /// the level of the rigid stabilizer or `vertex_level` (default 1).
  /// pullback tests that every generator of X fixes level 1 with all sections in S.
  void rist_evidence() {
    SubPtr rist = sub("rist");
    SubPtr other = sub("subgroup");
    const std::string rel = optional_str("relation").value_or("equal");
    if (rel != "equal" && rel != "contains" && rel != "contained" && rel != "branch" && rel != "pullback") {
      throw error("unknown relation '" + rel + "'");
    }
    std::vector<Vertex> verts;
    if (rist->kind == SubExpr::Kind::rist) {
      verts.push_back(rist->vertex);
    } else if (rist->kind == SubExpr::Kind::rist_level) {
      verts = level_vertices(rist->n, s_.degree());
    } else {
      const auto k = optional_str("vertex_level");
      verts = level_vertices(k ? to_size(*k, "vertex_level") : 1, s_.degree());
    }
    auto lv = levels();
    per_level(lv, expectations(lv, true, "true"), [=](const Session& s, std::size_t m) {
      const PermGroup x = s.eval(*rist, m);
      if (rel == "branch") {
        const std::size_t k = verts.front().level();
        if (k > m) {
          return str_of(true);
        }
        const PermGroup below = s.eval(*other, m - k);
        const std::size_t blocks = checked_power(s.degree(), k, SIZE_MAX / 2);
        for (const Vertex& v : verts) {
          for (const Permutation& g : below.generators()) {
            if (!x.contains(embed_in_block(g, blocks, vertex_index(v, s.degree())))) {
              return str_of(false);
            }
          }
        }
        return str_of(true);
      }
      if (rel == "pullback") {
        for (const Permutation& g : x.generators()) {
          if (!s.pullback_member(g, *other, m)) {
            return str_of(false);
          }
        }
        return str_of(true);
      }
      const PermGroup o = s.eval(*other, m);
      if (rel == "contains") {
        return str_of(is_subgroup(o, x));
      }
      if (rel == "contained") {
        return str_of(is_subgroup(x, o));
      }
      return str_of(same_group(x, o));
    });
  }

  /// |X M : gamma_i(X) M| for i = 1..terms, or the nilpotency class of XM/M.
  void series_order() {
    const std::string of = optional_str("of").value_or("G");
    const std::optional<std::string> mod = optional_str("modulo");
    sub_text(of, "of");
    if (mod) {
      sub_text(*mod, "modulo");
    }
    allow({"class", "indices"});
    auto lv = levels();
    auto term = [this, of, mod](std::size_t i) {
      const std::string g = "gamma(" + of + ", " + std::to_string(i) + ")";
      return sub_text(mod ? "join(" + g + ", " + *mod + ")" : g, "of");
    };
    auto top = sub_text(mod ? "join(" + of + ", " + *mod + ")" : of, "of");
    if (node_["class"]) {
      if (node_["indices"]) {
        throw error("give either 'class' or 'indices'");
      }
      YAML::Node c = node_["class"];
      std::vector<std::string> want;
      if (c.IsSequence()) {
        if (c.size() != lv.size()) {
          throw error("class list length differs from level count");
        }
        for (const YAML::Node& x : c) {
          want.push_back(std::to_string(to_size(x.Scalar(), "class")));
        }
      } else {
        want.assign(lv.size(), std::to_string(to_size(c.Scalar(), "class")));
      }
      std::vector<SubPtr> terms;
      for (std::size_t i = 1; i <= 64; ++i) {
        terms.push_back(term(i));
      }
      SubPtr base = mod ? sub_text(*mod, "modulo") : sub_text("gens(1)", "modulo");
      per_level(lv, want, [terms, base](const Session& s, std::size_t n) {
        const BigCount bottom = s.eval(*base, n).order();
        for (std::size_t i = 0; i < terms.size(); ++i) {
          if (s.eval(*terms[i], n).order() == bottom) {
            return std::to_string(i);  // gamma_{i+1} reached the bottom
          }
        }
        return std::string("unbounded");
      });
      return;
    }
    YAML::Node ind = node_["indices"];
    if (!ind || !ind.IsSequence() || ind.size() == 0) {
      throw error("series_order needs 'class' or a non-empty 'indices' list");
    }
    std::string want;
    std::vector<SubPtr> terms;
    for (std::size_t i = 0; i < ind.size(); ++i) {
      want += (i ? "," : "") + to_string(BigCount(ind[i].Scalar()));
      terms.push_back(term(i + 1));
    }
    per_level(lv, std::vector<std::string>(lv.size(), want), [terms, top](const Session& s, std::size_t n) {
      const PermGroup t = s.eval(*top, n);
      std::string out;
      for (std::size_t i = 0; i < terms.size(); ++i) {
        out += (i ? "," : "") + to_string(index(t, s.eval(*terms[i], n)));
      }
      return out;
    });
  }

  YAML::Node node_;
  const Session& s_;
  Check check_;
  std::set<std::string> allowed_;
};

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) {
    throw SuiteError("cannot read " + p.string());
  }
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace detail

inline Check make_check(const YAML::Node& node, const Session& s) {
  return detail::CheckBuilder(node, s).build();
}

inline std::shared_ptr<Session> open_group(const std::filesystem::path& file, const Limits& limits,
                                           std::shared_ptr<QuotientStore> store = nullptr) {
  return std::make_shared<Session>(parse(detail::read_file(file)), limits, std::move(store));
}

/// Loads a suite; the group path is relative to the suite file.
inline Suite load_suite(const std::filesystem::path& file, const Limits& limits,
                        std::shared_ptr<QuotientStore> store = nullptr) {
  YAML::Node root;
  try {
    root = YAML::LoadFile(file.string());
  } catch (const YAML::BadFile&) {
    throw SuiteError("cannot read " + file.string());
  } catch (const YAML::Exception& e) {
    throw SuiteError(file.string() + ": " + e.what());
  }
  if (!root.IsMap() || !root["group"]) {
    throw SuiteError(file.string() + ": a suite needs a 'group' field");
  }
  for (auto it = root.begin(); it != root.end(); ++it) {
    const std::string key = it->first.as<std::string>();
    if (key != "group" && key != "checks" && key != "note") {
      throw SuiteError(file.string() + ": unknown top-level field '" + key + "'");
    }
  }
  Suite suite;
  suite.path = file.string();
  suite.group_path = root["group"].as<std::string>();
  const auto group_file = file.parent_path() / suite.group_path;
  suite.session = open_group(group_file, limits, std::move(store));
  std::set<std::string> ids;
  if (YAML::Node checks = root["checks"]) {
    if (!checks.IsSequence()) {
      throw SuiteError(file.string() + ": 'checks' must be a list");
    }
    for (const YAML::Node& c : checks) {
      Check chk = make_check(c, *suite.session);
      if (!ids.insert(chk.id).second) {
        throw SuiteError(file.string() + ": duplicate check id '" + chk.id + "'");
      }
      suite.checks.push_back(std::move(chk));
    }
  }
  return suite;
}

inline CheckResult run_check(const Check& c, const Session& s) {
  CheckResult r;
  r.id = c.id;
  r.kind = c.kind;
  r.levels = c.levels;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    c.run(s, r);
  } catch (const std::exception& e) {
    r.verdict = "error";
    r.detail = e.what();
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

/// Runs every check on up to `jobs` threads; results keep the suite order.
inline RunReport run_suite(const Suite& suite, std::size_t jobs = 1) {
  RunReport rep;
  rep.suite = suite.path;
  rep.group = suite.group_path;
  rep.definition_hash = suite.session->hash();
  rep.checks.resize(suite.checks.size());
  const auto t0 = std::chrono::steady_clock::now();
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < suite.checks.size(); i = next++) {
      rep.checks[i] = run_check(suite.checks[i], *suite.session);
    }
  };
  jobs = std::max<std::size_t>(1, std::min(jobs, suite.checks.size()));
  std::vector<std::thread> pool;
  for (std::size_t j = 1; j < jobs; ++j) {
    pool.emplace_back(worker);
  }
  worker();
  for (std::thread& t : pool) {
    t.join();
  }
  rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

// ---------------------------------------------------------------------------
// Rendering

inline nlohmann::ordered_json to_json(const CheckResult& c) {
  nlohmann::ordered_json j;
  j["id"] = c.id;
  j["kind"] = c.kind;
  j["verdict"] = c.verdict;
  j["observed"] = c.observed;
  j["expected"] = c.expected;
  j["levels"] = c.levels;
  j["detail"] = c.detail;
  j["seconds"] = c.seconds;
  return j;
}

inline nlohmann::ordered_json to_json(const RunReport& r) {
  nlohmann::ordered_json j;
  j["tool"] = "wreath";
  j["version"] = tool_version();
  j["suite"] = r.suite;
  j["group"] = r.group;
  j["definition_hash"] = r.definition_hash;
  j["checks"] = nlohmann::ordered_json::array();
  for (const CheckResult& c : r.checks) {
    j["checks"].push_back(to_json(c));
  }
  j["summary"] = {{"total", r.checks.size()},
                  {"passed", r.count("pass")},
                  {"failed", r.count("fail")},
                  {"errors", r.count("error")}};
  j["seconds"] = r.seconds;
  return j;
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) {
    return s;
  }
  std::string out = "\"";
  for (char c : s) {
    out += c;
    if (c == '"') {
      out += '"';
    }
  }
  return out + "\"";
}

inline std::string to_csv(const RunReport& r) {
  std::ostringstream out;
  out << "id,kind,verdict,levels,observed,expected,seconds,detail\n";
  for (const CheckResult& c : r.checks) {
    std::string lv;
    for (std::size_t l : c.levels) {
      lv += (lv.empty() ? "" : " ") + std::to_string(l);
    }
    out << csv_field(c.id) << ',' << csv_field(c.kind) << ',' << c.verdict << ',' << csv_field(lv) << ','
        << csv_field(c.observed) << ',' << csv_field(c.expected) << ',' << c.seconds << ','
        << csv_field(c.detail) << '\n';
  }
  return out.str();
}

inline std::string to_text(const RunReport& r) {
  std::ostringstream out;
  out << "suite " << r.suite << "  group " << r.group << "  hash " << r.definition_hash.substr(0, 12) << "\n";
  for (const CheckResult& c : r.checks) {
    std::string verdict = c.verdict;
    for (char& ch : verdict) {
      ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
    }
    out << verdict << "  " << c.id << "  [" << c.kind << "]  " << c.observed;
    if (c.verdict != "pass") {
      out << "  (expected " << c.expected << ")";
    }
    if (!c.detail.empty() && c.verdict != "pass") {
      out << "\n       " << c.detail;
    }
    out << "\n";
  }
  out << r.count("pass") << "/" << r.checks.size() << " passed, " << r.count("fail") << " failed, "
      << r.count("error") << " errors in " << r.seconds << " s\n";
  return out.str();
}

}  // namespace wreath
