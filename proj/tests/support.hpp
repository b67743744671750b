#pragma once

// Shared helpers for the tests: group files, random elements, and brute-force
// subgroup computations that work on explicit element sets and never touch a
// stabilizer chain or tree table.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <memory>
#include <random>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include "wreath/dsl.hpp"
#include "wreath/filtration.hpp"
#include "wreath/mealy.hpp"
#include "wreath/permutation.hpp"

namespace wt {

using namespace wreath;
using PermSet = std::unordered_set<Permutation, PermutationHash>;

inline std::filesystem::path source_dir() { return WREATH_SOURCE_DIR; }

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline GroupDefinition load_definition(const std::string& name) {
  return parse(slurp(source_dir() / "groups" / (name + ".grp")));
}

inline std::shared_ptr<Session> session(const std::string& name, Limits limits = {}) {
  return std::make_shared<Session>(load_definition(name), limits);
}

/// Random word of the given length in the generators and their inverses.
inline Element random_word(const Session& s, std::mt19937_64& rng, std::size_t length) {
  std::vector<Element> letters;
  for (const GenDecl& g : s.definition().generators) {
    letters.push_back(s.resolution().at(g.name));
    letters.push_back(inverse(s.resolution().at(g.name)));
  }
  std::uniform_int_distribution<std::size_t> pick(0, letters.size() - 1);
  Element out = Element::identity(s.degree());
  for (std::size_t i = 0; i < length; ++i) {
    out = compose(out, letters[pick(rng)], s.limits());
  }
  return out;
}

/// Random finite-state automorphism: a machine with `states` random states.
inline Element random_automaton(std::size_t degree, std::size_t states, std::mt19937_64& rng) {
  std::vector<MealyState> ss;
  ss.push_back(MealyState{Permutation::identity(degree), std::vector<StateId>(degree, 0)});
  std::uniform_int_distribution<StateId> target(0, static_cast<StateId>(states));
  for (std::size_t i = 0; i < states; ++i) {
    std::vector<Point> images(degree);
    std::iota(images.begin(), images.end(), Point{0});
    std::shuffle(images.begin(), images.end(), rng);
    std::vector<StateId> t(degree);
    for (auto& x : t) {
      x = target(rng);
    }
    ss.push_back(MealyState{Permutation(images), t});
  }
  auto m = std::make_shared<const MealyMachine>(degree, std::move(ss));
  return Element(m, std::uniform_int_distribution<StateId>(0, static_cast<StateId>(states))(rng));
}

// Brute-force oracle -------------------------------------------------------

/// All products of the generators, by breadth-first search.
inline PermSet closure(const std::vector<Permutation>& gens, std::size_t degree) {
  PermSet seen{Permutation::identity(degree)};
  std::vector<Permutation> queue{Permutation::identity(degree)};
  for (std::size_t i = 0; i < queue.size(); ++i) {
    for (const Permutation& g : gens) {
      Permutation x = queue[i] * g;
      if (seen.insert(x).second) {
        queue.push_back(std::move(x));
      }
    }
  }
  return seen;
}

/// Smallest subgroup containing `seeds` and closed under conjugation by `ambient`.
/// On return `seeds` holds a generating set of the closure.
inline PermSet normal_closure(std::vector<Permutation>& seeds, const std::vector<Permutation>& ambient,
                              std::size_t degree) {
  for (;;) {
    PermSet n = closure(seeds, degree);
    bool grew = false;
    const std::size_t count = seeds.size();
    for (std::size_t i = 0; i < count; ++i) {
      for (const Permutation& a : ambient) {
        Permutation c = seeds[i].conjugate_by(a);
        if (!n.count(c)) {
          seeds.push_back(c);
          grew = true;
        }
      }
    }
    if (!grew) {
      return n;
    }
  }
}

inline std::vector<Permutation> elements(const PermSet& s) { return {s.begin(), s.end()}; }

/// [A, B] for A, B normal in <ambient>, B = <b_gens>: the normal closure of all
/// [x, y] with x in A and y a generator of B.
inline PermSet commutator(const PermSet& a, const std::vector<Permutation>& b_gens,
                          const std::vector<Permutation>& ambient, std::size_t degree,
                          std::vector<Permutation>* gens_out = nullptr) {
  std::vector<Permutation> seeds;
  PermSet seen;
  for (const Permutation& x : a) {
    for (const Permutation& y : b_gens) {
      Permutation c = Permutation::commutator(x, y);
      if (!c.is_identity() && seen.insert(c).second) {
        seeds.push_back(c);
      }
    }
  }
  PermSet out = normal_closure(seeds, ambient, degree);
  if (gens_out != nullptr) {
    *gens_out = seeds;
  }
  return out;
}

/// Subgroup generated by the given subsets' elements.
inline PermSet join(const PermSet& a, const PermSet& b, std::size_t degree) {
  std::vector<Permutation> gens(a.begin(), a.end());
  gens.insert(gens.end(), b.begin(), b.end());
  return closure(gens, degree);
}

/// Elements of `g` acting trivially on level n of a level-m quotient.
inline PermSet level_kernel(const PermSet& g, std::size_t degree, std::size_t m, std::size_t n) {
  std::size_t block = 1;
  for (std::size_t k = n; k < m; ++k) {
    block *= degree;
  }
  PermSet out;
  for (const Permutation& x : g) {
    bool fixes = true;
    for (Point i = 0; i < x.degree() && fixes; i += static_cast<Point>(block)) {
      fixes = x[i] / block == i / block;
    }
    if (fixes) {
      out.insert(x);
    }
  }
  return out;
}

inline PermSet product(const PermSet& a, const PermSet& b) {
  PermSet out;
  for (const Permutation& x : a) {
    for (const Permutation& y : b) {
      out.insert(x * y);
    }
  }
  return out;
}

inline std::vector<Permutation> truncated_generators(const Session& s, std::size_t n) {
  std::vector<Permutation> out;
  for (const GenDecl& g : s.definition().generators) {
    out.push_back(s.truncation(s.resolution().at(g.name), n));
  }
  return out;
}

}  // namespace wt
