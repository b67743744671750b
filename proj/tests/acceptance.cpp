// Acceptance run: one PASS/FAIL line per criterion, followed by the observed
// values that decided it. Exits 0 once every criterion has been evaluated;
// with --strict the exit status is the number of failing criteria.

#include <chrono>
#include <cstring>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

#include "support.hpp"
#include "wreath/suite.hpp"

using namespace wreath;

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass = true;
  std::vector<std::string> notes;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      notes.push_back("violated: " + what);
    }
  }
  void note(const std::string& s) { notes.push_back(s); }
};

std::string seq(const std::vector<std::string>& xs) {
  std::string out;
  for (const std::string& x : xs) {
    out += (out.empty() ? "" : " ") + x;
  }
  return out;
}

/// Nilpotency class of q / k, for k normal in q.
std::size_t class_modulo(const PermGroup& q, const PermGroup& k) {
  PermGroup cur = q;
  for (std::size_t c = 0;; ++c) {
    if (is_subgroup(cur, k)) {
      return c;
    }
    cur = join(commutator_subgroup(q, cur, q), k);
  }
}

bool same_image(const Session& s, const std::string& x, const std::string& y, std::size_t m) {
  return same_group(s.eval(x, m), s.eval(y, m));
}

// 1. |G : K' st(n)| = p^(n+1); class of G_n / K'_n = n.
Outcome criterion1() {
  Outcome o;
  const auto t0 = Clock::now();
  for (auto [name, p, top] : {std::tuple{"ggs3", 3u, 5u}, std::tuple{"ggs5", 5u, 3u}}) {
    auto s = wt::session(name);
    std::vector<std::string> seen;
    for (std::size_t n = 1; n <= top; ++n) {
      const BigCount got = s->quotient_index(*s->subgroup("Kprime"), n);
      const BigCount want = big_pow(p, n + 1);
      seen.push_back(to_string(got));
      o.require(got == want, std::string(name) + " n=" + std::to_string(n) + ": index " + to_string(got) +
                                 ", expected " + to_string(want));
    }
    o.note(std::string(name) + " |G:K'st(n)| for n=1.." + std::to_string(top) + ": " + seq(seen));
  }
  auto s = wt::session("ggs3");
  std::vector<std::string> classes;
  for (std::size_t n = 1; n <= 4; ++n) {
    const std::size_t c = class_modulo(s->level_quotient(n)->quotient, s->eval("Kprime", n));
    classes.push_back(std::to_string(c));
    o.require(c == n, "ggs3 class of G_" + std::to_string(n) + "/K' is " + std::to_string(c));
  }
  o.note("ggs3 class of G_n/K'_n for n=1..4: " + seq(classes));
  const double t = since(t0);
  o.require(t < 60.0, "runtime " + std::to_string(t) + " s >= 60 s");
  o.note("runtime " + std::to_string(t) + " s (limit 60 s)");
  return o;
}

// 2. gamma_n(G) K' = st(n) K' at levels n..min(n+2, cap), n <= 4, p = 3.
Outcome criterion2() {
  Outcome o;
  auto s = wt::session("ggs3");
  std::size_t cap = 0;
  while (cap < s->limits().max_level &&
         checked_power(s->degree(), cap + 1, s->limits().point_cap) <= s->limits().point_cap) {
    ++cap;
  }
  for (std::size_t n = 1; n <= 4; ++n) {
    const std::string lhs = "join(gamma(G, " + std::to_string(n) + "), Kprime)";
    const std::string rhs = "join(stab(" + std::to_string(n) + "), Kprime)";
    const std::string shifted = "join(gamma(G, " + std::to_string(n + 1) + "), Kprime)";
    std::vector<std::string> literal;
    std::vector<std::string> plus_one;
    for (std::size_t m = n; m <= std::min(n + 2, cap); ++m) {
      const bool eq = same_image(*s, lhs, rhs, m);
      literal.push_back(eq ? "=" : "!=");
      plus_one.push_back(same_image(*s, shifted, rhs, m) ? "=" : "!=");
      o.require(eq, "n=" + std::to_string(n) + " level " + std::to_string(m));
    }
    o.note("n=" + std::to_string(n) + " gamma_n K' vs st(n) K' at levels " + std::to_string(n) + ".." +
           std::to_string(std::min(n + 2, cap)) + ": " + seq(literal) + "; gamma_(n+1) K' vs st(n) K': " +
           seq(plus_one));
  }
  return o;
}

// 3. Basilica identities and the alpha, beta generators of gamma3 modulo G''.
Outcome criterion3() {
  Outcome o;
  auto s = wt::session("basilica");
  auto timed = [&](const std::string& lhs, const std::string& rhs) {
    const auto t0 = Clock::now();
    const bool eq = equal(s->element(lhs), s->element(rhs), s->limits());
    const double t = since(t0);
    o.require(eq, lhs + " = " + rhs);
    o.require(t < 1.0, lhs + " took " + std::to_string(t) + " s");
  };
  timed("[a, b^-1]", "(b, b^-1)");
  timed("[[b, a], a]", "1");
  timed("[[a, b^-1], b]", "(b^-1 * (b^a)^-1, b^2)");
  const std::string alpha = "(b^2 * [b, a], b^-2)";
  const std::string beta = "(b^-2, b^2 * [b, a]^-1)";
  const Element ea = s->element(alpha);
  const Element eb = s->element(beta);
  auto h = s->subgroup("gamma3");
  std::vector<std::string> profile;
  for (std::size_t m = 1; m <= 8; ++m) {
    o.require(s->coset_member(ea, *h, m) && s->coset_member(eb, *h, m),
              "alpha, beta in gamma3 at level " + std::to_string(m));
    o.require(same_image(*s, "gamma3", "join(Gsecond, gens(" + alpha + ", " + beta + "))", m),
              "gamma3 = <G'', alpha, beta> at level " + std::to_string(m));
    if (m >= 4) {
      const bool pa = s->pullback_member(ea, *h, m);
      const bool pb = s->pullback_member(eb, *h, m);
      auto sa = s->section_coset_profile(ea, *h, {1, 2}, m);
      auto sb = s->section_coset_profile(eb, *h, {1, 2}, m);
      profile.push_back(std::to_string(m) + ":" + (pa ? "in" : "out") + "/" + (pb ? "in" : "out"));
      o.require(!pa && !pb && !sa[0] && !sa[1] && !sb[0] && !sb[1],
                "alpha, beta outside psi^-1(gamma3 x gamma3) at level " + std::to_string(m));
    }
  }
  o.note("pullback of alpha/beta into gamma3 x gamma3 at levels 4..8: " + seq(profile));
  return o;
}

// 4. Ladders for n = 1..4.
Outcome criterion4() {
  Outcome o;
  const auto t0 = Clock::now();
  auto s = wt::session("basilica");
  auto gp = s->subgroup("Gprime");
  auto a = s->subgroup("A");
  for (std::size_t n = 1; n <= 4; ++n) {
    const long long e = 1LL << n;
    const Element bn = power(s->element("b"), e, s->limits());
    const Element an = power(s->element("a"), e, s->limits());
    const std::string tag = "n=" + std::to_string(n) + " ";
    o.require(s->coset_member(bn, *gp, 2 * n), tag + "b^(2^n) in G'st(2n)");
    o.require(!s->coset_member(bn, *gp, 2 * n + 1), tag + "b^(2^n) not in G'st(2n+1)");
    o.require(!s->coset_member(bn, *a, 2 * n + 1), tag + "b^(2^n) not in A st(2n+1)");
    o.require(!s->coset_member(an, *gp, 2 * n + 2), tag + "a^(2^n) not in G'st(2n+2)");
  }
  const double t = since(t0);
  o.require(t < 120.0, "runtime " + std::to_string(t) + " s >= 120 s");
  o.note("runtime " + std::to_string(t) + " s (limit 120 s)");
  return o;
}

// 5. psi(G'') = gamma3 x gamma3 at level 6.
Outcome criterion5() {
  Outcome o;
  auto s = wt::session("basilica");
  const std::size_t m = 6;
  auto gamma3 = s->subgroup("gamma3");
  const PermGroup second = s->eval("Gsecond", m);
  for (const Permutation& g : second.generators()) {
    o.require(s->pullback_member(g, *gamma3, m), "G'' generator " + g.cycles() + " pulls back into gamma3");
  }
  auto us = s->element_generators(*s->subgroup("gamma(G, 3)"));
  o.require(us.has_value() && !us->empty(), "gamma3 has element generators");
  for (const Element& u : us.value_or(std::vector<Element>{})) {
    for (std::size_t v = 1; v <= 2; ++v) {
      o.require(second.contains(s->truncation(embed_at(u, Vertex{v}), m)),
                "embedded gamma3 generator at vertex " + std::to_string(v));
    }
  }
  // The level-5 image of gamma3, embedded below each first-level vertex.
  const PermGroup lower = s->eval("gamma3", m - 1);
  for (const Permutation& u : lower.generators()) {
    for (std::size_t v = 0; v < 2; ++v) {
      o.require(second.contains(embed_permutation(u, 2, v)), "embedded gamma3 image generator");
    }
  }
  o.note(std::to_string(second.generators().size()) + " generators of G''_6 checked, " +
         std::to_string(us ? us->size() : 0) + " normal generators of gamma3 embedded");
  return o;
}

// 6. psi(K'') >= G'' x G'' x G'' and G'' <= gamma3(K), level 4, p = 3.
Outcome criterion6() {
  Outcome o;
  auto s = wt::session("ggs3");
  const std::size_t m = 4;
  const PermGroup ksecond = s->eval("Ksecond", m);
  const PermGroup g3k = s->eval("gamma3K", m);
  std::size_t count = 0;
  const PermGroup lower = s->eval("Gsecond", m - 1);
  for (const Permutation& u : lower.generators()) {
    for (std::size_t v = 0; v < 3; ++v) {
      o.require(ksecond.contains(embed_permutation(u, 3, v)), "embedded G'' generator in K''");
      ++count;
    }
  }
  const PermGroup second = s->eval("Gsecond", m);
  for (const Permutation& g : second.generators()) {
    o.require(g3k.contains(g), "G'' generator " + g.cycles() + " in gamma3(K)");
  }
  o.note(std::to_string(count) + " embeddings checked; |G''_4| = " + to_string(order(second)));
  return o;
}

// 7. |G'_n : gamma3_n| for n in {2,4,6,8}.
Outcome criterion7() {
  Outcome o;
  auto s = wt::session("basilica");
  std::vector<BigCount> idx;
  std::vector<std::string> shown;
  for (std::size_t n : {2u, 4u, 6u, 8u}) {
    const BigCount i = index(s->eval("Gprime", n), s->eval("gamma3", n));
    idx.push_back(i);
    shown.push_back(to_string(i));
    o.require(exact_log(i, 2).has_value(), "index at level " + std::to_string(n) + " is a power of 2");
    o.require(same_image(*s, "Gprime", "join(gamma3, gens([a, b^-1]))", n),
              "G' = <gamma3, [a,b^-1]> at level " + std::to_string(n));
  }
  std::size_t rises = 0;
  for (std::size_t i = 1; i < idx.size(); ++i) {
    rises += idx[i] > idx[i - 1];
  }
  o.require(rises >= 2, "strict increases: " + std::to_string(rises));
  o.note("|G'_n : gamma3_n| at n=2,4,6,8: " + seq(shown));
  return o;
}

// 8. Scans that must not find a level stabilizer.
Outcome criterion8() {
  Outcome o;
  auto check = [&](const char* group, const char* sub, std::size_t depth) {
    auto s = wt::session(group);
    ScanReport r = s->congruence_scan(*s->subgroup(sub), depth);
    bool certified = !r.facts.empty();
    for (const LevelFact& f : r.facts) {
      certified = certified && !f.contained && f.escaping.has_value();
    }
    o.require(!r.found && certified, std::string(group) + " " + sub + ": " + r.verdict());
    o.note(std::string(group) + " scan(" + sub + ", " + std::to_string(depth) + ") = " + r.verdict() + " with " +
           std::to_string(r.facts.size()) + " escaping certificates");
  };
  check("basilica", "Gprime", 8);
  check("ggs3", "Kprime", 4);
  check("ggs3", "Gsecond", 4);
  check("ggs5", "Kprime", 4);
  auto s = wt::session("ggs3");
  o.note("ggs3 scan(K, 4) = " + s->congruence_scan(*s->subgroup("K"), 4).verdict() +
         " (K has index 3 and contains st(2))");
  return o;
}

// 9. BSGS order and membership against breadth-first enumeration.
Outcome criterion9() {
  Outcome o;
  for (auto [name, lo, hi] : {std::tuple{"basilica", 2u, 3u}, std::tuple{"ggs3", 1u, 2u}}) {
    auto s = wt::session(name);
    std::mt19937_64 rng(2024);
    std::size_t sifts = 0;
    std::size_t members = 0;
    for (std::size_t n = lo; n <= hi; ++n) {
      const PermGroup& q = s->level_quotient(n)->quotient;
      auto gens = wt::truncated_generators(*s, n);
      Enumeration e = enumerate(q, 1000000);
      wt::PermSet all = wt::closure(gens, s->points(n));
      o.require(!e.overflow && BigCount(all.size()) == order(q) && BigCount(e.elements.size()) == order(q),
                std::string(name) + " level " + std::to_string(n) + " order");
      o.note(std::string(name) + " level " + std::to_string(n) + ": BSGS order " + to_string(order(q)) +
             ", enumeration " + std::to_string(all.size()));
      std::vector<Permutation> elems = wt::elements(all);
      for (int i = 0; i < 500; ++i) {
        Permutation x = i % 2 ? elems[rng() % elems.size()]
                              : truncate(wt::random_automaton(s->degree(), 3, rng), n);
        const bool expected = all.count(x) > 0;
        members += expected;
        ++sifts;
        o.require(q.contains(x) == expected, "sift of " + x.cycles());
      }
    }
    o.note(std::string(name) + ": " + std::to_string(sifts) + " random sifts, " + std::to_string(members) +
           " members");
  }
  return o;
}

// 10. Property suites, parser fuzzing, and the shipped suites.
Outcome criterion10() {
  Outcome o;
  std::mt19937_64 rng(10);
  std::size_t failures = 0;
  const int cases = 10000;
  for (int i = 0; i < cases; ++i) {
    const std::size_t d = 2 + rng() % 2;
    Element g = wt::random_automaton(d, 1 + rng() % 4, rng);
    Element h = wt::random_automaton(d, 1 + rng() % 4, rng);
    Element k = wt::random_automaton(d, 1 + rng() % 4, rng);
    const std::size_t n = 1 + rng() % 4;
    Vertex v;
    for (std::size_t len = rng() % 4; len > 0; --len) {
      v.path.push_back(1 + rng() % d);
    }
    const Element gh = compose(g, h);
    const Element nf = normal_form(gh);
    failures += truncate(gh, n) != truncate(g, n) * truncate(h, n);
    failures += !equal(section(gh, v), compose(section(g, v), section(h, act(g, v))));
    failures += !equal(compose(gh, k), compose(g, compose(h, k)));
    failures += !equal(inverse(inverse(g)), g);
    failures += normal_form(nf).machine().serialize() != nf.machine().serialize();
  }
  o.require(failures == 0, std::to_string(failures) + " property failures");
  o.note(std::to_string(cases) + " cases x 5 properties, " + std::to_string(failures) + " failures");

  const std::vector<std::string> pieces{"tree", "degree", "2", "gen", "sub", "a", "b", "=", "(", ")", ",",
                                        "*", "^", "-1", "@", "[", "]", "1", "ncl", "G", "stab", "#", "\n"};
  std::size_t parsed = 0;
  std::size_t rejected = 0;
  for (int i = 0; i < cases; ++i) {
    std::string text = "tree degree 2\n";
    for (std::size_t k = rng() % 30; k > 0; --k) {
      text += pieces[rng() % pieces.size()] + " ";
    }
    try {
      resolve(parse(text));
      ++parsed;
    } catch (const Error&) {
      ++rejected;
    }
  }
  o.note("fuzz: " + std::to_string(parsed) + " parsed, " + std::to_string(rejected) + " rejected, 0 crashes");

  const auto t0 = Clock::now();
  for (const char* suite : {"basilica", "ggs3", "ggs5", "core-properties"}) {
    Suite st = load_suite(wt::source_dir() / "suites" / (std::string(suite) + ".yaml"), {});
    RunReport r = run_suite(st);
    o.require(r.exit_code() == 0, std::string(suite) + " suite: " + std::to_string(r.count("fail")) + " failed, " +
                                      std::to_string(r.count("error")) + " errors");
    o.note(std::string(suite) + ": " + std::to_string(r.count("pass")) + "/" + std::to_string(r.checks.size()) +
           " passed");
  }
  const double t = since(t0);
  o.require(t < 300.0, "suite runtime " + std::to_string(t) + " s >= 300 s");
  o.note("all suites in " + std::to_string(t) + " s (limit 300 s)");
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  const bool strict = argc > 1 && std::strcmp(argv[1], "--strict") == 0;
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"GGS maximal-class orders", criterion1},
      {"GGS filtration identity", criterion2},
      {"Basilica exact identities", criterion3},
      {"Basilica membership ladders", criterion4},
      {"psi(G'') evidence", criterion5},
      {"GGS K'' and gamma3(K) evidence", criterion6},
      {"Cyclic growth of G'/gamma3", criterion7},
      {"Negative congruence witnesses", criterion8},
      {"Oracle equivalence", criterion9},
      {"Property suites", criterion10},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.pass = false;
      o.note(std::string("error: ") + e.what());
    }
    failed += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " " << (i + 1) << " " << criteria[i].first << " ("
              << since(t0) << " s)\n";
    for (const std::string& n : o.notes) {
      std::cout << "     " << n << "\n";
    }
    std::cout.flush();
  }
  std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria pass\n";
  return strict ? failed : 0;
}
