#pragma once

// Finite permutation groups with exact order and membership.
//
// Two representations share one interface: a Schreier-Sims stabilizer chain for
// arbitrary groups, and a vertex-indexed table (TreeTable) for groups of
// p-adic tree automorphisms, which is what level quotients of GGS and Basilica
// groups are. The tree form is chosen only when a layout is supplied and every
// generator fits it.

#include <algorithm>
#include <cstddef>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_set>
#include <utility>
#include <variant>
#include <vector>

#include "wreath/bigcount.hpp"
#include "wreath/error.hpp"
#include "wreath/permutation.hpp"
#include "wreath/stab_chain.hpp"
#include "wreath/tree_table.hpp"

namespace wreath {

class PermGroup {
 public:
  PermGroup() : PermGroup(0, {}, std::make_shared<const StabChain>(0, std::vector<Permutation>{})) {}

  std::size_t degree() const { return degree_; }

  /// Generators as a subgroup.
  const std::vector<Permutation>& generators() const { return generators_; }

  /// Generators as a normal subgroup of the group it was closed in; equal to
  /// generators() for groups that did not come from a normal closure.
  const std::vector<Permutation>& normal_generators() const {
    return normal_generators_.empty() ? generators_ : normal_generators_;
  }

  bool is_tree() const { return tree_ != nullptr; }
  const TreeTable* tree() const { return tree_.get(); }
  const StabChain* chain() const { return chain_.get(); }
  std::optional<TreeLayout> layout() const {
    if (tree_) {
      return tree_->geometry().layout();
    }
    return std::nullopt;
  }

  BigCount order() const { return tree_ ? tree_->group_order() : chain_->order(); }

  bool contains(const Permutation& x) const {
    if (x.degree() != degree_) {
      throw DegreeMismatch("membership test: degree " + std::to_string(x.degree()) +
                           " against group of degree " + std::to_string(degree_));
    }
    if (tree_) {
      return tree_->geometry().is_cyclic_automorphism(x) && tree_->contains(x);
    }
    return chain_->contains(x);
  }

  bool is_trivial() const { return order() == 1; }

  /// Strong generators. For tree groups these are the table entries in vertex order.
  std::vector<Permutation> strong_generators() const {
    if (tree_) {
      std::vector<Permutation> out;
      for (const TreeTable::Entry* e : tree_->sorted_entries()) {
        out.push_back(e->element);
      }
      return out;
    }
    return chain_->strong_generators();
  }

  /// Base points, 1-based. For tree groups a base point is a vertex label
  /// "v<level>:<index>" naming the first child of the entry's vertex, since
  /// the chain is taken over the action on vertices.
  std::vector<std::string> base_description() const {
    std::vector<std::string> out;
    if (tree_) {
      for (const TreeTable::Entry* e : tree_->sorted_entries()) {
        Vertex child = tree_->geometry().vertex(e->vertex).child(1);
        out.push_back(child.str());
      }
    } else {
      for (Point b : chain_->base()) {
        out.push_back(std::to_string(b + 1));
      }
    }
    return out;
  }

  std::vector<std::size_t> transversal_sizes() const {
    std::vector<std::size_t> out;
    if (tree_) {
      out.assign(tree_->size(), tree_->geometry().degree());
    } else {
      for (const auto& l : chain_->levels()) {
        out.push_back(l.orbit.size());
      }
    }
    return out;
  }

  // Internal constructors; use build() and friends.
  PermGroup(std::size_t degree, std::vector<Permutation> gens, std::shared_ptr<const StabChain> chain)
      : degree_(degree), generators_(std::move(gens)), chain_(std::move(chain)) {}
  PermGroup(std::size_t degree, std::vector<Permutation> gens, std::shared_ptr<const TreeTable> tree)
      : degree_(degree), generators_(std::move(gens)), tree_(std::move(tree)) {}

  PermGroup with_normal_generators(std::vector<Permutation> n) const {
    PermGroup copy = *this;
    copy.normal_generators_ = std::move(n);
    return copy;
  }

 private:
  std::size_t degree_ = 0;
  std::vector<Permutation> generators_;
  std::vector<Permutation> normal_generators_;
  std::shared_ptr<const StabChain> chain_;
  std::shared_ptr<const TreeTable> tree_;
};

namespace detail {

inline std::vector<Permutation> nontrivial_unique(const std::vector<Permutation>& gens) {
  std::vector<Permutation> out;
  std::unordered_set<Permutation, PermutationHash> seen;
  for (const Permutation& g : gens) {
    if (!g.is_identity() && seen.insert(g).second) {
      out.push_back(g);
    }
  }
  return out;
}

inline void check_degrees(const std::vector<Permutation>& gens, std::size_t degree) {
  for (const Permutation& g : gens) {
    if (g.degree() != degree) {
      throw DegreeMismatch("generator of degree " + std::to_string(g.degree()) +
                           " in a group of degree " + std::to_string(degree));
    }
  }
}

inline bool fits_layout(const std::vector<Permutation>& gens, const TreeLayout& layout) {
  if (!is_prime(layout.degree) || layout.depth == 0) {
    return false;
  }
  const auto geo = TreeGeometry::get(layout);
  return std::all_of(gens.begin(), gens.end(),
                     [&](const Permutation& g) { return geo->is_cyclic_automorphism(g); });
}

}  // namespace detail

/// Deterministic BSGS for <gens>. With a layout whose degree is prime and whose
/// labels every generator respects, the tree table is used.
inline PermGroup build(const std::vector<Permutation>& gens, std::size_t degree,
                       std::optional<TreeLayout> layout = std::nullopt) {
  detail::check_degrees(gens, degree);
  std::vector<Permutation> g = detail::nontrivial_unique(gens);
  if (layout && layout->leaves() == degree && detail::fits_layout(g, *layout)) {
    auto table = std::make_shared<TreeTable>(TreeGeometry::get(*layout));
    table->close(g, {}, &g);
    return PermGroup(degree, std::move(g), std::shared_ptr<const TreeTable>(std::move(table)));
  }
  return PermGroup(degree, g, std::make_shared<const StabChain>(degree, g));
}

inline BigCount order(const PermGroup& g) { return g.order(); }

inline bool contains(const PermGroup& g, const Permutation& x) { return g.contains(x); }

/// Every generator of H lies in G.
inline bool is_subgroup(const PermGroup& h, const PermGroup& g) {
  if (h.degree() != g.degree()) {
    throw DegreeMismatch("subgroup test across degrees");
  }
  return std::all_of(h.generators().begin(), h.generators().end(),
                     [&](const Permutation& x) { return g.contains(x); });
}

inline bool same_group(const PermGroup& a, const PermGroup& b) {
  return a.order() == b.order() && is_subgroup(a, b);
}

/// Smallest subgroup containing `seeds` that is normalized by the ambient generators.
inline PermGroup normal_closure(const PermGroup& ambient, const std::vector<Permutation>& seeds) {
  detail::check_degrees(seeds, ambient.degree());
  for (const Permutation& s : seeds) {
    if (!ambient.contains(s)) {
      throw NotASubgroup("normal closure seed " + s.cycles() + " is not in the ambient group");
    }
  }
  std::vector<Permutation> n = detail::nontrivial_unique(seeds);
  const std::vector<Permutation>& amb = ambient.generators();
  if (ambient.is_tree()) {
    auto table = std::make_shared<TreeTable>(ambient.tree()->geometry_ptr());
    table->close(n, amb);
    std::vector<Permutation> gens;
    for (const TreeTable::Entry* e : table->sorted_entries()) {
      gens.push_back(e->element);
    }
    return PermGroup(ambient.degree(), std::move(gens), std::shared_ptr<const TreeTable>(std::move(table)))
        .with_normal_generators(n);
  }
  std::vector<Permutation> gens = n;
  auto chain = std::make_shared<StabChain>(ambient.degree(), gens);
  for (std::size_t i = 0; i < gens.size(); ++i) {
    for (const Permutation& x : amb) {
      Permutation c = gens[i].conjugate_by(x);
      if (!chain->contains(c)) {
        gens.push_back(c);
        chain = std::make_shared<StabChain>(ambient.degree(), gens);
      }
    }
  }
  return PermGroup(ambient.degree(), gens, std::shared_ptr<const StabChain>(std::move(chain)))
      .with_normal_generators(n);
}

/// Normal closure in `ambient` of the commutators of A's generators with B's
/// normal generators. This is [A,B] when A and B are normal in the ambient.
inline PermGroup commutator_subgroup(const PermGroup& ambient, const PermGroup& a, const PermGroup& b) {
  if (!is_subgroup(a, ambient) || !is_subgroup(b, ambient)) {
    throw NotASubgroup("commutator subgroup arguments must lie in the ambient group");
  }
  // Either side may play the role of A; take the one giving fewer seeds.
  const bool swap = a.generators().size() * b.normal_generators().size() >
                    b.generators().size() * a.normal_generators().size();
  const std::vector<Permutation>& left = swap ? b.generators() : a.generators();
  const std::vector<Permutation>& right = swap ? a.normal_generators() : b.normal_generators();
  std::vector<Permutation> seeds;
  for (const Permutation& x : left) {
    for (const Permutation& y : right) {
      seeds.push_back(Permutation::commutator(x, y));
    }
  }
  return normal_closure(ambient, seeds);
}

inline PermGroup derived_subgroup(const PermGroup& ambient, const PermGroup& a) {
  return commutator_subgroup(ambient, a, a);
}

/// gamma_1 .. gamma_k with gamma_{i+1} = [gamma_i, ambient].
inline std::vector<PermGroup> lower_central_series(const PermGroup& ambient, std::size_t k) {
  if (k == 0) {
    throw OutOfRange("lower central series needs k >= 1");
  }
  std::vector<PermGroup> out{ambient};
  while (out.size() < k) {
    if (out.back().is_trivial()) {
      out.push_back(out.back());
      continue;
    }
    out.push_back(commutator_subgroup(ambient, out.back(), ambient));
  }
  return out;
}

inline PermGroup join(const PermGroup& g, const PermGroup& h) {
  if (g.degree() != h.degree()) {
    throw DegreeMismatch("join of groups of different degree");
  }
  std::vector<Permutation> gens = g.generators();
  gens.insert(gens.end(), h.generators().begin(), h.generators().end());
  gens = detail::nontrivial_unique(gens);
  if (g.is_tree() && h.is_tree() && g.layout() == h.layout()) {
    auto table = std::make_shared<TreeTable>(*g.tree());
    table->close(h.strong_generators(), {}, &gens);
    return PermGroup(g.degree(), std::move(gens), std::shared_ptr<const TreeTable>(std::move(table)));
  }
  return build(gens, g.degree(), g.layout() ? g.layout() : h.layout());
}

inline BigCount index(const PermGroup& g, const PermGroup& h) {
  if (!is_subgroup(h, g)) {
    throw NotASubgroup("index: second group is not a subgroup of the first");
  }
  return g.order() / h.order();
}

/// Subgroup fixing each listed 0-based point.
inline PermGroup pointwise_stabilizer(const PermGroup& g, const std::vector<Point>& points) {
  for (Point p : points) {
    if (p >= g.degree()) {
      throw OutOfRange("point " + std::to_string(p + 1) + " outside 1.." + std::to_string(g.degree()));
    }
  }
  if (g.is_tree()) {
    // A leaf is fixed exactly when its ancestors are fixed with trivial labels.
    const TreeTable& t = *g.tree();
    const TreeGeometry& geo = t.geometry();
    std::vector<bool> first(geo.vertex_count(), false);
    const std::size_t m = geo.depth();
    const std::size_t d = geo.degree();
    for (Point p : points) {
      std::size_t idx = p;
      for (std::size_t k = m; k-- > 0;) {
        idx /= d;
        first[geo.level_offset(k) + idx] = true;
      }
    }
    std::size_t count = static_cast<std::size_t>(std::count(first.begin(), first.end(), true));
    TreeTable re = t.reordered(TreeTable::order_with_prefix(geo, first));
    auto tail = std::make_shared<const TreeTable>(re.tail_as_bfs(count));
    std::vector<Permutation> gens;
    for (const TreeTable::Entry* e : tail->sorted_entries()) {
      gens.push_back(e->element);
    }
    return PermGroup(g.degree(), std::move(gens), std::move(tail));
  }
  std::vector<Point> prefix;
  for (Point p : points) {
    if (std::find(prefix.begin(), prefix.end(), p) == prefix.end()) {
      prefix.push_back(p);
    }
  }
  StabChain c(g.degree(), g.chain()->strong_generators(), prefix);
  std::vector<Permutation> gens = c.stabilizer_generators(prefix.size());
  return build(gens, g.degree());
}

/// Subgroup acting trivially on the first `level` levels of a tree group;
/// for other groups, the pointwise stabilizer of the listed blocks' points.
inline PermGroup level_stabilizer(const PermGroup& g, std::size_t level) {
  if (!g.is_tree()) {
    throw Error("level stabilizer requires a tree-layout group");
  }
  const TreeGeometry& geo = g.tree()->geometry();
  if (level > geo.depth()) {
    throw OutOfRange("level " + std::to_string(level) + " beyond depth " + std::to_string(geo.depth()));
  }
  auto tail = std::make_shared<const TreeTable>(g.tree()->tail_as_bfs(geo.level_offset(level)));
  std::vector<Permutation> gens;
  for (const TreeTable::Entry* e : tail->sorted_entries()) {
    gens.push_back(e->element);
  }
  return PermGroup(g.degree(), std::move(gens), std::move(tail));
}

struct Enumeration {
  bool overflow = false;
  std::vector<Permutation> elements;
};

/// All elements by breadth-first closure, or overflow past `cap` elements.
inline Enumeration enumerate(const PermGroup& g, std::size_t cap) {
  Enumeration out;
  std::unordered_set<Permutation, PermutationHash> seen;
  out.elements.push_back(Permutation::identity(g.degree()));
  seen.insert(out.elements.back());
  for (std::size_t i = 0; i < out.elements.size(); ++i) {
    for (const Permutation& s : g.generators()) {
      Permutation x = out.elements[i] * s;
      if (seen.insert(x).second) {
        if (out.elements.size() >= cap) {
          out.overflow = true;
          out.elements.clear();
          return out;
        }
        out.elements.push_back(std::move(x));
      }
    }
  }
  return out;
}

/// Cache text form: versioned header, then kind, degree, layout, base,
/// generators and strong generators in cycle notation.
inline std::string serialize(const PermGroup& g) {
  std::ostringstream out;
  out << "wreath-bsgs v1\n";
  out << "kind " << (g.is_tree() ? "tree" : "chain") << "\n";
  out << "degree " << g.degree() << "\n";
  if (auto l = g.layout()) {
    out << "layout " << l->degree << " " << l->depth << "\n";
  }
  out << "base";
  for (const std::string& b : g.base_description()) {
    out << " " << b;
  }
  out << "\n";
  out << "generators " << g.generators().size() << "\n";
  for (const Permutation& p : g.generators()) {
    out << p.cycles() << "\n";
  }
  std::vector<Permutation> strong = g.strong_generators();
  out << "strong " << strong.size() << "\n";
  for (const Permutation& p : strong) {
    out << p.cycles() << "\n";
  }
  return out.str();
}

inline PermGroup deserialize_group(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  auto next = [&]() -> std::string {
    if (!std::getline(in, line)) {
      throw Error("truncated group serialization");
    }
    return line;
  };
  auto field = [&](const std::string& key) {
    std::string l = next();
    if (l.rfind(key + " ", 0) != 0 && l != key) {
      throw Error("expected '" + key + "' in group serialization, got '" + l + "'");
    }
    return l.size() > key.size() ? l.substr(key.size() + 1) : std::string();
  };
  if (next() != "wreath-bsgs v1") {
    throw Error("unknown group serialization header");
  }
  const std::string kind = field("kind");
  const std::size_t degree = std::stoul(field("degree"));
  std::optional<TreeLayout> layout;
  if (kind == "tree") {
    std::istringstream ls(field("layout"));
    TreeLayout l;
    ls >> l.degree >> l.depth;
    if (!ls || l.leaves() != degree) {
      throw Error("bad layout line in group serialization");
    }
    layout = l;
  } else if (kind != "chain") {
    throw Error("unknown group kind '" + kind + "'");
  }
  const std::string base = field("base");
  auto read_perms = [&](const std::string& key) {
    std::size_t n = std::stoul(field(key));
    std::vector<Permutation> out;
    for (std::size_t i = 0; i < n; ++i) {
      out.push_back(Permutation::parse_cycles(next(), degree));
    }
    return out;
  };
  std::vector<Permutation> gens = read_perms("generators");
  std::vector<Permutation> strong = read_perms("strong");
  if (layout) {
    auto table = std::make_shared<const TreeTable>(
        TreeTable::from_entries(TreeGeometry::get(*layout), strong));
    for (const Permutation& g : gens) {
      if (!table->contains(g)) {
        throw Error("stored generator is not in the stored group");
      }
    }
    return PermGroup(degree, std::move(gens), std::move(table));
  }
  std::vector<Point> base_points;
  std::istringstream bs(base);
  std::size_t b = 0;
  while (bs >> b) {
    if (b == 0 || b > degree) {
      throw Error("base point out of range in group serialization");
    }
    base_points.push_back(static_cast<Point>(b - 1));
  }
  auto chain = std::make_shared<const StabChain>(degree, strong, base_points);
  if (chain->strong_generators().size() != detail::nontrivial_unique(strong).size() ||
      chain->base() != base_points) {
    throw Error("stored strong generators do not form a base and strong generating set");
  }
  for (const Permutation& g : gens) {
    if (!chain->contains(g)) {
      throw Error("stored generator is not in the stored group");
    }
  }
  return PermGroup(degree, std::move(gens), std::move(chain));
}

}  // namespace wreath
