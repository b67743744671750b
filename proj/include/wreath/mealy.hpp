#pragma once

// Tree automorphisms given by finite wreath recursions (Mealy machines).
//
// Convention: right action. An element is written (g_1, ..., g_d) s where g_x is
// the section at child x and s the root permutation; it maps the vertex x w to
// s(x) (w under g_x). Products apply the left factor first:
//   (g_1..g_d)s * (h_1..h_d)t = (g_1 h_{s(1)}, ..., g_d h_{s(d)}) st
// and [x, y] = x^-1 y^-1 x y, x^g = g^-1 x g.

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "wreath/error.hpp"
#include "wreath/permutation.hpp"
#include "wreath/vertex.hpp"

namespace wreath {

using StateId = std::uint32_t;

struct Limits {
  std::size_t state_cap = 100000;  ///< product-machine states before minimization
  std::size_t point_cap = 1024;    ///< leaves of a level quotient (d^n)
  std::size_t max_level = 10;
};

struct MealyState {
  Permutation root;                  ///< action on the d children
  std::vector<StateId> transitions;  ///< transitions[x]: section at child x (0-based)
};

/// A finite automaton over the alphabet {1..d}. State 0 is always the identity.
class MealyMachine {
 public:
  explicit MealyMachine(std::size_t degree) : degree_(degree) {
    if (degree < 2) {
      throw Error("tree degree must be at least 2");
    }
    states_.push_back(MealyState{Permutation::identity(degree), std::vector<StateId>(degree, 0)});
  }

  MealyMachine(std::size_t degree, std::vector<MealyState> states)
      : degree_(degree), states_(std::move(states)) {
    validate();
  }

  std::size_t degree() const { return degree_; }
  std::size_t size() const { return states_.size(); }
  const MealyState& state(StateId s) const { return states_.at(s); }
  const std::vector<MealyState>& states() const { return states_; }

  StateId add_state(MealyState s) {
    states_.push_back(std::move(s));
    return static_cast<StateId>(states_.size() - 1);
  }

  MealyState& mutable_state(StateId s) { return states_.at(s); }

  void validate() const {
    if (degree_ < 2) {
      throw Error("tree degree must be at least 2");
    }
    if (states_.empty()) {
      throw Error("machine has no identity state");
    }
    for (std::size_t i = 0; i < states_.size(); ++i) {
      const auto& s = states_[i];
      if (s.root.degree() != degree_ || s.transitions.size() != degree_) {
        throw DegreeMismatch("state " + std::to_string(i) + " has wrong arity");
      }
      for (StateId t : s.transitions) {
        if (t >= states_.size()) {
          throw Error("state " + std::to_string(i) + " has a dangling transition");
        }
      }
    }
    const auto& id = states_[0];
    if (!id.root.is_identity()) {
      throw Error("state 0 must be the identity");
    }
    for (StateId t : id.transitions) {
      if (t != 0) {
        throw Error("state 0 must be the identity");
      }
    }
  }

  /// One line per state: `state <id>: perm=<cycles> trans=[t1,...,td]`.
  std::string serialize() const {
    std::ostringstream os;
    os << "machine degree " << degree_ << " states " << states_.size() << "\n";
    for (std::size_t i = 0; i < states_.size(); ++i) {
      os << "state " << i << ": perm=" << states_[i].root.cycles() << " trans=[";
      for (std::size_t x = 0; x < degree_; ++x) {
        os << (x ? "," : "") << states_[i].transitions[x];
      }
      os << "]\n";
    }
    return os.str();
  }

 private:
  std::size_t degree_;
  std::vector<MealyState> states_;
};

/// One tree automorphism: a state of a shared, immutable machine.
class Element {
 public:
  Element(std::shared_ptr<const MealyMachine> machine, StateId state)
      : machine_(std::move(machine)), state_(state) {
    if (!machine_ || state_ >= machine_->size()) {
      throw Error("element refers to a missing state");
    }
  }

  static Element identity(std::size_t degree) {
    return Element(std::make_shared<const MealyMachine>(degree), 0);
  }

  /// The rooted automorphism acting as `root` on level 1 with trivial sections.
  static Element rooted(const Permutation& root) {
    MealyMachine m(root.degree());
    StateId s = m.add_state(MealyState{root, std::vector<StateId>(root.degree(), 0)});
    return Element(std::make_shared<const MealyMachine>(std::move(m)), s);
  }

  std::size_t degree() const { return machine_->degree(); }
  const MealyMachine& machine() const { return *machine_; }
  const std::shared_ptr<const MealyMachine>& machine_ptr() const { return machine_; }
  StateId state() const { return state_; }
  const Permutation& root_permutation() const { return machine_->state(state_).root; }

 private:
  std::shared_ptr<const MealyMachine> machine_;
  StateId state_;
};

namespace detail {

/// Reachable closure of `root` (state 0 always included), minimized by
/// greatest-fixed-point partition refinement and renumbered canonically:
/// 0 = identity, 1 = the element (unless trivial), then breadth-first order.
inline Element canonicalize(const MealyMachine& m, StateId root) {
  const std::size_t d = m.degree();
  std::vector<StateId> local_of(m.size(), UINT32_MAX);
  std::vector<StateId> members;
  auto visit = [&](StateId s) {
    if (local_of[s] == UINT32_MAX) {
      local_of[s] = static_cast<StateId>(members.size());
      members.push_back(s);
    }
  };
  visit(0);
  visit(root);
  for (std::size_t i = 0; i < members.size(); ++i) {
    for (StateId t : m.state(members[i]).transitions) {
      visit(t);
    }
  }
  const std::size_t n = members.size();

  std::vector<std::uint32_t> cls(n);
  std::size_t class_count = 0;
  {
    std::map<std::vector<Point>, std::uint32_t> by_perm;
    for (std::size_t i = 0; i < n; ++i) {
      auto [it, fresh] = by_perm.try_emplace(m.state(members[i]).root.images(),
                                             static_cast<std::uint32_t>(by_perm.size()));
      cls[i] = it->second;
    }
    class_count = by_perm.size();
  }
  for (;;) {
    std::map<std::vector<std::uint32_t>, std::uint32_t> by_sig;
    std::vector<std::uint32_t> next(n);
    std::vector<std::uint32_t> sig(d + 1);
    for (std::size_t i = 0; i < n; ++i) {
      sig[0] = cls[i];
      const auto& tr = m.state(members[i]).transitions;
      for (std::size_t x = 0; x < d; ++x) {
        sig[x + 1] = cls[local_of[tr[x]]];
      }
      auto [it, fresh] = by_sig.try_emplace(sig, static_cast<std::uint32_t>(by_sig.size()));
      next[i] = it->second;
    }
    cls.swap(next);
    if (by_sig.size() == class_count) {
      break;
    }
    class_count = by_sig.size();
  }

  std::vector<std::size_t> representative(class_count, SIZE_MAX);
  for (std::size_t i = 0; i < n; ++i) {
    if (representative[cls[i]] == SIZE_MAX) {
      representative[cls[i]] = i;
    }
  }

  const std::uint32_t identity_class = cls[0];
  std::vector<StateId> new_id(class_count, UINT32_MAX);
  std::vector<std::uint32_t> order;
  new_id[identity_class] = 0;
  order.push_back(identity_class);
  auto enqueue = [&](std::uint32_t c) {
    if (new_id[c] == UINT32_MAX) {
      new_id[c] = static_cast<StateId>(order.size());
      order.push_back(c);
    }
  };
  enqueue(cls[local_of[root]]);
  for (std::size_t i = 1; i < order.size(); ++i) {
    const auto& tr = m.state(members[representative[order[i]]]).transitions;
    for (std::size_t x = 0; x < d; ++x) {
      enqueue(cls[local_of[tr[x]]]);
    }
  }

  std::vector<MealyState> states;
  states.reserve(order.size());
  for (std::uint32_t c : order) {
    const auto& src = m.state(members[representative[c]]);
    MealyState s{src.root, std::vector<StateId>(d)};
    for (std::size_t x = 0; x < d; ++x) {
      s.transitions[x] = new_id[cls[local_of[src.transitions[x]]]];
    }
    states.push_back(std::move(s));
  }
  StateId new_root = new_id[cls[local_of[root]]];
  return Element(std::make_shared<const MealyMachine>(d, std::move(states)), new_root);
}

inline void check_same_degree(const Element& g, const Element& h) {
  if (g.degree() != h.degree()) {
    throw DegreeMismatch("elements act on trees of degree " + std::to_string(g.degree()) +
                         " and " + std::to_string(h.degree()));
  }
}

}  // namespace detail

/// Minimized normal form; two elements are equal iff their normal forms serialize identically.
inline Element normal_form(const Element& g) { return detail::canonicalize(g.machine(), g.state()); }

/// "apply g, then h"
inline Element compose(const Element& g, const Element& h, const Limits& limits = {}) {
  detail::check_same_degree(g, h);
  const std::size_t d = g.degree();
  const MealyMachine& mg = g.machine();
  const MealyMachine& mh = h.machine();

  std::unordered_map<std::uint64_t, StateId> index;
  std::vector<std::pair<StateId, StateId>> pairs;
  auto key = [](StateId a, StateId b) { return (std::uint64_t{a} << 32) | b; };
  auto intern = [&](StateId a, StateId b) {
    auto [it, fresh] = index.try_emplace(key(a, b), static_cast<StateId>(pairs.size()));
    if (fresh) {
      if (pairs.size() >= limits.state_cap) {
        throw StateCapExceeded("product machine exceeds " + std::to_string(limits.state_cap) +
                               " states");
      }
      pairs.emplace_back(a, b);
    }
    return it->second;
  };
  intern(0, 0);
  StateId root = intern(g.state(), h.state());

  std::vector<MealyState> states;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    auto [a, b] = pairs[i];
    const MealyState& sa = mg.state(a);
    const MealyState& sb = mh.state(b);
    MealyState s{sa.root * sb.root, std::vector<StateId>(d)};
    for (std::size_t x = 0; x < d; ++x) {
      s.transitions[x] = intern(sa.transitions[x], sb.transitions[sa.root[static_cast<Point>(x)]]);
    }
    states.push_back(std::move(s));
  }
  MealyMachine product(d, std::move(states));
  return detail::canonicalize(product, root);
}

/// ((g_1..g_d)s)^-1 = (g_{s^-1(1)}^-1, ..., g_{s^-1(d)}^-1) s^-1, built state-parallel.
inline Element inverse(const Element& g) {
  const MealyMachine& m = g.machine();
  const std::size_t d = m.degree();
  std::vector<MealyState> states;
  states.reserve(m.size());
  for (const MealyState& s : m.states()) {
    Permutation inv = s.root.inverse();
    MealyState t{inv, std::vector<StateId>(d)};
    for (std::size_t x = 0; x < d; ++x) {
      t.transitions[x] = s.transitions[inv[static_cast<Point>(x)]];
    }
    states.push_back(std::move(t));
  }
  return Element(std::make_shared<const MealyMachine>(d, std::move(states)), g.state());
}

inline bool is_identity(const Element& g) { return normal_form(g).state() == 0; }

/// Decided by minimizing the machine of g h^-1.
inline bool equal(const Element& g, const Element& h, const Limits& limits = {}) {
  detail::check_same_degree(g, h);
  return compose(g, inverse(h), limits).state() == 0;
}

inline Element power(const Element& g, long long e, const Limits& limits = {}) {
  Element base = e < 0 ? inverse(g) : g;
  unsigned long long n = e < 0 ? static_cast<unsigned long long>(-(e + 1)) + 1
                               : static_cast<unsigned long long>(e);
  Element result = Element::identity(g.degree());
  while (n > 0) {
    if (n & 1ULL) {
      result = compose(result, base, limits);
    }
    n >>= 1ULL;
    if (n > 0) {
      base = compose(base, base, limits);
    }
  }
  return result;
}

inline Element commutator(const Element& x, const Element& y, const Limits& limits = {}) {
  Element r = compose(inverse(x), inverse(y), limits);
  r = compose(r, x, limits);
  return compose(r, y, limits);
}

/// g^-1 x g
inline Element conjugate(const Element& x, const Element& g, const Limits& limits = {}) {
  return compose(compose(inverse(g), x, limits), g, limits);
}

inline Element section(const Element& g, const Vertex& v) {
  v.check(g.degree());
  StateId s = g.state();
  for (std::size_t x : v.path) {
    s = g.machine().state(s).transitions[x - 1];
  }
  return Element(g.machine_ptr(), s);
}

inline Vertex act(const Element& g, const Vertex& v) {
  v.check(g.degree());
  Vertex out;
  out.path.reserve(v.path.size());
  StateId s = g.state();
  for (std::size_t x : v.path) {
    const MealyState& st = g.machine().state(s);
    out.path.push_back(st.root[static_cast<Point>(x - 1)] + 1);
    s = st.transitions[x - 1];
  }
  return out;
}

/// The permutation induced on the d^n vertices of level n (lexicographic, see vertex_index).
inline Permutation truncate(const Element& g, std::size_t n, const Limits& limits = {}) {
  const std::size_t d = g.degree();
  const std::size_t count = checked_power(d, n, limits.point_cap);
  if (count > limits.point_cap) {
    throw PointCapExceeded("level " + std::to_string(n) + " of the " + std::to_string(d) +
                           "-regular tree exceeds the point cap of " +
                           std::to_string(limits.point_cap));
  }
  const MealyMachine& m = g.machine();
  std::vector<Point> image{0};
  std::vector<StateId> state{g.state()};
  for (std::size_t k = 0; k < n; ++k) {
    std::vector<Point> next_image(image.size() * d);
    std::vector<StateId> next_state(image.size() * d);
    for (std::size_t i = 0; i < image.size(); ++i) {
      const MealyState& st = m.state(state[i]);
      for (std::size_t x = 0; x < d; ++x) {
        next_image[i * d + x] = static_cast<Point>(image[i] * d + st.root[static_cast<Point>(x)]);
        next_state[i * d + x] = st.transitions[x];
      }
    }
    image.swap(next_image);
    state.swap(next_state);
  }
  return Permutation::from_images_unchecked(std::move(image));
}

/// The element with the given sections and root permutation.
inline Element from_sections(const std::vector<Element>& sections, const Permutation& root) {
  const std::size_t d = root.degree();
  if (sections.size() != d) {
    throw DegreeMismatch("tuple has " + std::to_string(sections.size()) +
                         " entries for a tree of degree " + std::to_string(d));
  }
  MealyMachine m(d);
  std::vector<StateId> entry(d);
  for (std::size_t x = 0; x < d; ++x) {
    if (sections[x].degree() != d) {
      throw DegreeMismatch("section degree differs from tuple degree");
    }
    const MealyMachine& src = sections[x].machine();
    const StateId offset = static_cast<StateId>(m.size());
    for (const MealyState& s : src.states()) {
      MealyState t = s;
      for (StateId& tr : t.transitions) {
        tr += offset;
      }
      m.add_state(std::move(t));
    }
    entry[x] = offset + sections[x].state();
  }
  StateId r = m.add_state(MealyState{root, entry});
  return detail::canonicalize(m, r);
}

/// Acts as h on the subtree at v and trivially everywhere else.
inline Element embed_at(const Element& h, const Vertex& v) {
  v.check(h.degree());
  const std::size_t d = h.degree();
  Element cur = h;
  for (std::size_t k = v.path.size(); k-- > 0;) {
    std::vector<Element> sections(d, Element::identity(d));
    sections[v.path[k] - 1] = cur;
    cur = from_sections(sections, Permutation::identity(d));
  }
  return normal_form(cur);
}

struct Portrait {
  Permutation root;
  std::vector<Portrait> children;  ///< empty at the depth limit

  /// One line per vertex in lexicographic depth-first order: "<path> <cycles>".
  std::string serialize() const {
    std::string out;
    write(Vertex{}, out);
    return out;
  }

 private:
  void write(const Vertex& at, std::string& out) const {
    out += at.str() + " " + root.cycles() + "\n";
    for (std::size_t x = 0; x < children.size(); ++x) {
      children[x].write(at.child(x + 1), out);
    }
  }
};

inline Portrait portrait(const Element& g, std::size_t depth) {
  const MealyState& s = g.machine().state(g.state());
  Portrait p{s.root, {}};
  if (depth > 0) {
    for (std::size_t x = 0; x < g.degree(); ++x) {
      p.children.push_back(portrait(Element(g.machine_ptr(), s.transitions[x]), depth - 1));
    }
  }
  return p;
}

/// `root <id>` line followed by the canonical machine.
inline std::string serialize(const Element& g) {
  Element nf = normal_form(g);
  return "root " + std::to_string(nf.state()) + "\n" + nf.machine().serialize();
}

}  // namespace wreath
