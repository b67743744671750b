#pragma once

// JSON renderings of filtration results. Timing fields are kept under keys
// named "seconds" so they can be dropped before comparing reports.

#include <string>

#include "json.hpp"
#include "wreath/filtration.hpp"

namespace wreath {

inline const char* tool_version() { return "0.3.0"; }

inline nlohmann::ordered_json to_json(const LevelFact& f) {
  nlohmann::ordered_json j;
  j["stab"] = f.n;
  j["level"] = f.level;
  j["contained"] = f.contained;
  if (f.escaping) {
    j["escaping"] = f.escaping->cycles();
  }
  return j;
}

inline nlohmann::ordered_json to_json(const ScanReport& r) {
  nlohmann::ordered_json j;
  j["claim"] = "congruence_scan(" + r.target + ")";
  j["level"] = r.max_level;
  j["verdict"] = r.verdict();
  j["exact"] = r.exact;
  j["certificates"] = nlohmann::ordered_json::array();
  for (const LevelFact& f : r.facts) {
    j["certificates"].push_back(to_json(f));
  }
  j["seconds"] = r.seconds;
  return j;
}

inline nlohmann::ordered_json to_json(const Hypothesis& h) {
  nlohmann::ordered_json j;
  j["id"] = h.id;
  j["description"] = h.description;
  j["status"] = h.skipped ? "skipped" : h.passed ? "pass" : "fail";
  j["strength"] = h.strength;
  j["levels"] = h.levels;
  j["certificates"] = h.certificates;
  return j;
}

inline nlohmann::ordered_json to_json(const Theorem1Report& r) {
  nlohmann::ordered_json j;
  j["claim"] = "theorem1(R = " + r.r + ", H = " + r.h + ")";
  j["level"] = r.depth;
  j["verdict"] = r.passed() ? "pass" : "fail";
  j["hypotheses"] = nlohmann::ordered_json::array();
  for (const Hypothesis& h : r.hypotheses) {
    j["hypotheses"].push_back(to_json(h));
  }
  j["seconds"] = r.seconds;
  return j;
}

inline nlohmann::ordered_json to_json(const PermGroup& g) {
  nlohmann::ordered_json j;
  j["degree"] = g.degree();
  j["order"] = to_string(g.order());
  j["backend"] = g.is_tree() ? "tree" : "chain";
  j["base"] = g.base_description();
  j["transversal_sizes"] = g.transversal_sizes();
  j["generators"] = nlohmann::ordered_json::array();
  for (const Permutation& p : g.generators()) {
    j["generators"].push_back(p.cycles());
  }
  return j;
}

/// Drops every "seconds" field, recursively.
inline nlohmann::ordered_json without_timings(nlohmann::ordered_json j) {
  if (j.is_object()) {
    j.erase("seconds");
    for (auto& [k, v] : j.items()) {
      v = without_timings(v);
    }
  } else if (j.is_array()) {
    for (auto& v : j) {
      v = without_timings(v);
    }
  }
  return j;
}

}  // namespace wreath
