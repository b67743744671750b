#pragma once

// Groups of level-m tree automorphisms whose vertex labels are powers of the
// standard p-cycle (p = d prime), i.e. subgroups of the iterated wreath product
// C_p wr ... wr C_p acting on the d^m leaves.
//
// Such a group is stored as a table indexed by tree vertices: the entry at a
// vertex u has trivial labels at every vertex before u (in an ancestor-respecting
// vertex order) and label 1 at u. The entries form an induced polycyclic
// sequence, so the group order is p^(number of entries) and membership is
// decided by sifting along the vertex order.
//
// Viewed as a permutation group on the vertices of the tree, the table is a
// base and strong generating set: the base point of the entry at u is the first
// child of u, its basic orbit is the d children of u, and the transversal is
// the powers of the entry.

#include <cstddef>
#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <vector>

#include "wreath/bigcount.hpp"
#include "wreath/permutation.hpp"
#include "wreath/vertex.hpp"

namespace wreath {

struct TreeLayout {
  std::size_t degree = 2;
  std::size_t depth = 0;

  std::size_t leaves() const {
    std::size_t n = 1;
    for (std::size_t k = 0; k < depth; ++k) {
      n *= degree;
    }
    return n;
  }

  friend bool operator==(const TreeLayout&, const TreeLayout&) = default;
  friend auto operator<=>(const TreeLayout&, const TreeLayout&) = default;
};

inline bool is_prime(std::size_t n) {
  if (n < 2) {
    return false;
  }
  for (std::size_t q = 2; q * q <= n; ++q) {
    if (n % q == 0) {
      return false;
    }
  }
  return true;
}

/// Vertex bookkeeping for levels 0..m-1 of a layout. Vertices are numbered
/// breadth-first: level k starts at (d^k - 1)/(d - 1).
class TreeGeometry {
 public:
  explicit TreeGeometry(TreeLayout layout) : layout_(layout) {
    const std::size_t d = layout.degree;
    const std::size_t leaves = layout.leaves();
    std::size_t width = 1;
    std::size_t block = leaves;
    for (std::size_t k = 0; k < layout.depth; ++k) {
      level_offset_.push_back(level_.size());
      for (std::size_t i = 0; i < width; ++i) {
        level_.push_back(static_cast<std::uint32_t>(k));
        first_leaf_.push_back(static_cast<Point>(i * block));
        child_size_.push_back(static_cast<Point>(block / d));
      }
      width *= d;
      block /= d;
    }
    level_offset_.push_back(level_.size());
    digit_.resize(layout.depth * leaves);
    for (std::size_t k = 0; k < layout.depth; ++k) {
      const std::size_t c = child_size_[level_offset_[k]];
      for (std::size_t x = 0; x < leaves; ++x) {
        digit_[k * leaves + x] = static_cast<std::uint8_t>((x / c) % d);
      }
    }
  }

  const TreeLayout& layout() const { return layout_; }
  std::size_t degree() const { return layout_.degree; }
  std::size_t depth() const { return layout_.depth; }
  std::size_t vertex_count() const { return level_.size(); }
  std::size_t level_offset(std::size_t k) const { return level_offset_.at(k); }
  std::uint32_t level(std::size_t v) const { return level_[v]; }
  Point first_leaf(std::size_t v) const { return first_leaf_[v]; }
  Point child_size(std::size_t v) const { return child_size_[v]; }

  std::size_t vertex_id(const Vertex& v) const {
    return level_offset(v.level()) + vertex_index(v, degree());
  }
  Vertex vertex(std::size_t id) const {
    std::size_t k = level_[id];
    return vertex_at(id - level_offset_[k], k, degree());
  }

  /// Label at a vertex that g fixes: the shift g applies to its children.
  std::uint32_t label(const Permutation& g, std::size_t v) const {
    return digit_[level_[v] * leaves_ + g[first_leaf_[v]]];
  }

  /// Whether g fixes every vertex of level depth-1, i.e. only has labels there.
  bool is_bottom(const Permutation& g) const {
    const std::size_t d = degree();
    for (Point x = 0; x < g.degree(); ++x) {
      if (g[x] / d != x / d) {
        return false;
      }
    }
    return true;
  }

  /// Whether g is a tree automorphism all of whose labels are cyclic shifts.
  bool is_cyclic_automorphism(const Permutation& g) const {
    if (g.degree() != layout_.leaves()) {
      return false;
    }
    const std::size_t d = degree();
    for (std::size_t v = 0; v < vertex_count(); ++v) {
      const Point s = first_leaf_[v];
      const Point c = child_size_[v];
      const Point block = c * static_cast<Point>(d);
      const Point target = g[s] / block;
      const Point shift = (g[s] % block) / c;
      for (std::size_t x = 0; x < d; ++x) {
        Point img = g[s + static_cast<Point>(x) * c];
        Point expected = target * static_cast<Point>(d) + static_cast<Point>((x + shift) % d);
        if (img / c != expected) {
          return false;
        }
      }
    }
    return true;
  }

  static std::shared_ptr<const TreeGeometry> get(TreeLayout layout) {
    static std::mutex mutex;
    static std::map<TreeLayout, std::shared_ptr<const TreeGeometry>> cache;
    std::lock_guard<std::mutex> lock(mutex);
    auto& slot = cache[layout];
    if (!slot) {
      slot = std::make_shared<const TreeGeometry>(layout);
    }
    return slot;
  }

 private:
  TreeLayout layout_;
  std::vector<std::uint32_t> level_;
  std::vector<Point> first_leaf_;
  std::vector<Point> child_size_;
  std::vector<std::size_t> level_offset_;
  std::size_t leaves_ = layout_.leaves();
  std::vector<std::uint8_t> digit_;  ///< digit_[k*N + x]: child index of leaf x below its level-k ancestor
};

class TreeTable {
 public:
  struct Entry {
    Permutation element;
    Permutation inverse;
    std::vector<Permutation> powers;  ///< powers[k] = element^k, k < p
    std::uint32_t position = 0;
    std::uint32_t vertex = 0;
    bool bottom = false;  ///< labels only on the deepest level
    /// For deepest-level entries of a breadth-first table: the label vectors
    /// of powers[k], concatenated for k = 0..p-1.
    std::vector<std::uint8_t> bottom_labels;
  };

  /// Trivial group; `order` must list every vertex once, parents before children.
  TreeTable(std::shared_ptr<const TreeGeometry> geometry, std::vector<std::uint32_t> order)
      : geometry_(std::move(geometry)), order_(std::move(order)) {
    entry_at_.assign(order_.size(), -1);
    bfs_ = true;
    for (std::size_t i = 0; i < order_.size(); ++i) {
      bfs_ = bfs_ && order_[i] == i;
    }
  }

  explicit TreeTable(std::shared_ptr<const TreeGeometry> geometry)
      : TreeTable(geometry, bfs_order(*geometry)) {}

  static std::vector<std::uint32_t> bfs_order(const TreeGeometry& g) {
    std::vector<std::uint32_t> o(g.vertex_count());
    for (std::size_t i = 0; i < o.size(); ++i) {
      o[i] = static_cast<std::uint32_t>(i);
    }
    return o;
  }

  /// Vertices of `first` (in breadth-first order), then the rest breadth-first.
  /// `first` must be closed under taking parents.
  static std::vector<std::uint32_t> order_with_prefix(const TreeGeometry& g,
                                                      const std::vector<bool>& first) {
    std::vector<std::uint32_t> o;
    o.reserve(g.vertex_count());
    for (std::size_t v = 0; v < g.vertex_count(); ++v) {
      if (first[v]) {
        o.push_back(static_cast<std::uint32_t>(v));
      }
    }
    for (std::size_t v = 0; v < g.vertex_count(); ++v) {
      if (!first[v]) {
        o.push_back(static_cast<std::uint32_t>(v));
      }
    }
    return o;
  }

  const TreeGeometry& geometry() const { return *geometry_; }
  const std::shared_ptr<const TreeGeometry>& geometry_ptr() const { return geometry_; }
  const std::vector<std::uint32_t>& order() const { return order_; }
  std::size_t size() const { return entries_.size(); }

  BigCount group_order() const { return big_pow(geometry_->degree(), entries_.size()); }

  /// Entries sorted by position.
  std::vector<const Entry*> sorted_entries() const {
    std::vector<const Entry*> out;
    for (int idx : entry_at_) {
      if (idx >= 0) {
        out.push_back(&entries_[static_cast<std::size_t>(idx)]);
      }
    }
    return out;
  }

  /// Sifts g in place. Returns the position of the first label that no entry
  /// can clear, or nullopt when g reduces to the identity.
  std::optional<std::size_t> sift(Permutation& g, std::size_t from = 0) const {
    const std::size_t p = geometry_->degree();
    const std::size_t n = order_.size();
    const std::size_t upper_end = bfs_ ? geometry_->level_offset(geometry_->depth() - 1) : n;
    for (std::size_t q = from; q < upper_end; ++q) {
      const std::size_t v = bfs_ ? q : order_[q];
      std::uint32_t l = geometry_->label(g, v);
      if (l == 0) {
        continue;
      }
      int idx = entry_at_[q];
      if (idx < 0) {
        return q;
      }
      g *= entries_[static_cast<std::size_t>(idx)].powers[p - l];
    }
    if (!bfs_) {
      return std::nullopt;
    }
    // What is left only has labels on the deepest level: eliminate on label vectors.
    const std::size_t width = n - upper_end;
    std::vector<std::uint8_t> lambda(width);
    bool nonzero = false;
    for (std::size_t j = 0; j < width; ++j) {
      lambda[j] = static_cast<std::uint8_t>(geometry_->label(g, upper_end + j));
      nonzero = nonzero || lambda[j] != 0;
    }
    if (!nonzero) {
      return std::nullopt;
    }
    std::optional<std::size_t> stuck;
    for (std::size_t j = std::max(from, upper_end) - upper_end; j < width; ++j) {
      const std::uint8_t l = lambda[j];
      if (l == 0) {
        continue;
      }
      int idx = entry_at_[upper_end + j];
      if (idx < 0) {
        stuck = upper_end + j;
        break;
      }
      const std::uint8_t* w = entries_[static_cast<std::size_t>(idx)].bottom_labels.data() + (p - l) * width;
      for (std::size_t k = j; k < width; ++k) {
        std::uint8_t x = static_cast<std::uint8_t>(lambda[k] + w[k]);
        lambda[k] = x >= p ? static_cast<std::uint8_t>(x - p) : x;
      }
    }
    // Rebuild the residue from its labels.
    std::vector<Point> images(g.degree());
    for (std::size_t j = 0; j < width; ++j) {
      for (std::size_t x = 0; x < p; ++x) {
        images[j * p + x] = static_cast<Point>(j * p + (x + lambda[j]) % p);
      }
    }
    g = Permutation::from_images_unchecked(std::move(images));
    return stuck;
  }

  bool contains(Permutation g) const { return !sift(g).has_value(); }

  /// Adds `seeds` and closes under products, and under conjugation by `ambient`
  /// when it is non-empty (normal closure).
  ///
  /// In breadth-first order, with X a generating set of the final group (given
  /// as `action`) or of a group normalizing it (`ambient`), the table spans a
  /// group once every entry's conjugates by X sift, p-th powers sift, and
  /// entries led on the same level commute modulo deeper entries: by downward
  /// induction each span of levels >= k is then a subgroup normalized by X.
  /// Otherwise all pairs of entries are commuted.
  void close(const std::vector<Permutation>& seeds, const std::vector<Permutation>& ambient = {},
             const std::vector<Permutation>* action = nullptr) {
    struct Task {
      enum Kind : std::uint8_t { seed, power, comm, conj } kind;
      std::uint32_t a;
      std::uint32_t b;
    };
    const std::vector<Permutation>& conj_set = !ambient.empty() ? ambient
                                               : action         ? *action
                                                                : ambient;
    const bool by_level = bfs_ && (!ambient.empty() || action != nullptr);
    std::vector<Permutation> conj_inv;
    for (const Permutation& x : conj_set) {
      conj_inv.push_back(x.inverse());
    }
    std::deque<Task> queue;
    for (std::size_t i = 0; i < seeds.size(); ++i) {
      queue.push_back({Task::seed, static_cast<std::uint32_t>(i), 0});
    }
    // Existing entries are already closed under products; conjugates still
    // have to be checked.
    for (std::size_t e = 0; e < entries_.size(); ++e) {
      if (!conj_set.empty()) {
        for (std::size_t k = 0; k < conj_set.size(); ++k) {
          queue.push_back({Task::conj, static_cast<std::uint32_t>(e), static_cast<std::uint32_t>(k)});
        }
      }
    }
    const std::size_t p = geometry_->degree();
    const std::size_t n = geometry_->layout().leaves();
    std::vector<Point> buf(n);
    while (!queue.empty()) {
      Task t = queue.front();
      queue.pop_front();
      switch (t.kind) {
        case Task::seed:
          buf = seeds[t.a].images();
          break;
        case Task::power: {
          const Entry& e = entries_[t.a];
          const Point* a = e.powers[p - 1].images().data();
          const Point* b = e.element.images().data();
          for (std::size_t i = 0; i < n; ++i) {
            buf[i] = b[a[i]];
          }
          break;
        }
        case Task::comm: {
          const Entry& x = entries_[t.a];
          const Entry& y = entries_[t.b];
          const Point* xi = x.inverse.images().data();
          const Point* yi = y.inverse.images().data();
          const Point* xf = x.element.images().data();
          const Point* yf = y.element.images().data();
          for (std::size_t i = 0; i < n; ++i) {
            buf[i] = yf[xf[yi[xi[i]]]];
          }
          break;
        }
        case Task::conj: {
          const Entry& x = entries_[t.a];
          const Point* ci = conj_inv[t.b].images().data();
          const Point* cf = conj_set[t.b].images().data();
          const Point* xf = x.element.images().data();
          for (std::size_t i = 0; i < n; ++i) {
            buf[i] = cf[xf[ci[i]]];
          }
          break;
        }
      }
      Permutation g = Permutation::from_images_unchecked(buf);
      auto stuck = sift(g);
      if (!stuck) {
        continue;
      }
      const std::uint32_t e = insert(std::move(g), *stuck);
      const bool e_bottom = entries_[e].bottom;
      if (!e_bottom) {
        queue.push_back({Task::power, e, 0});
      }
      const std::uint32_t e_level = geometry_->level(entries_[e].vertex);
      for (std::uint32_t f = 0; f < e; ++f) {
        if (e_bottom && entries_[f].bottom) {
          continue;  // labels at the last level commute
        }
        if (by_level && geometry_->level(entries_[f].vertex) != e_level) {
          continue;
        }
        queue.push_back({Task::comm, e, f});
      }
      if (!ambient.empty() || by_level) {
        for (std::size_t k = 0; k < conj_set.size(); ++k) {
          queue.push_back({Task::conj, e, static_cast<std::uint32_t>(k)});
        }
      }
    }
  }

  /// Entries at positions >= `from` as a breadth-first table. Valid when the
  /// vertices before `from` are closed under parents (their entries are dropped).
  TreeTable tail_as_bfs(std::size_t from) const {
    TreeTable out(geometry_);
    for (const Entry* e : sorted_entries()) {
      if (e->position >= from) {
        Entry copy = *e;
        copy.position = copy.vertex;
        out.fill_bottom(copy);
        out.entry_at_[copy.position] = static_cast<int>(out.entries_.size());
        out.entries_.push_back(std::move(copy));
      }
    }
    return out;
  }

  /// Same group, table rebuilt for another vertex order.
  TreeTable reordered(std::vector<std::uint32_t> order) const {
    TreeTable out(geometry_, std::move(order));
    std::vector<Permutation> seeds;
    for (const Entry* e : sorted_entries()) {
      seeds.push_back(e->element);
    }
    out.close(seeds);
    return out;
  }

  /// Rebuilds a table from stored entries (cache reload). Entries must be normalized.
  static TreeTable from_entries(std::shared_ptr<const TreeGeometry> geometry,
                                const std::vector<Permutation>& elements) {
    TreeTable out(std::move(geometry));
    for (const Permutation& g : elements) {
      Permutation copy = g;
      auto stuck = out.sift(copy);
      if (!stuck || copy != g) {
        throw Error("stored table entry is not in echelon form");
      }
      if (out.geometry_->label(g, out.order_[*stuck]) != 1) {
        throw Error("stored table entry is not normalized");
      }
      out.insert(g, *stuck);
    }
    return out;
  }

 private:
  void fill_bottom(Entry& e) const {
    const std::size_t p = geometry_->degree();
    e.bottom = geometry_->is_bottom(e.element);
    e.bottom_labels.clear();
    if (e.bottom && bfs_) {
      const std::size_t upper_end = geometry_->level_offset(geometry_->depth() - 1);
      const std::size_t width = order_.size() - upper_end;
      e.bottom_labels.resize(p * width);
      for (std::size_t k = 0; k < p; ++k) {
        for (std::size_t j = 0; j < width; ++j) {
          e.bottom_labels[k * width + j] =
              static_cast<std::uint8_t>(geometry_->label(e.powers[k], upper_end + j));
        }
      }
    }
  }

  std::uint32_t insert(Permutation g, std::size_t position) {
    const std::size_t p = geometry_->degree();
    const std::uint32_t vertex = order_[position];
    std::uint32_t l = geometry_->label(g, vertex);
    // raise to l^{-1} mod p so the leading label becomes 1
    std::size_t inv = 1;
    for (std::size_t k = 0; k + 2 < p; ++k) {
      inv = inv * l % p;
    }
    if (inv != 1) {
      g = g.pow(static_cast<long long>(inv));
    }
    Entry e;
    e.powers.reserve(p);
    e.powers.push_back(Permutation::identity(g.degree()));
    for (std::size_t k = 1; k < p; ++k) {
      e.powers.push_back(e.powers.back() * g);
    }
    e.inverse = e.powers[p - 1];
    e.element = std::move(g);
    e.position = static_cast<std::uint32_t>(position);
    e.vertex = vertex;
    fill_bottom(e);
    const auto idx = static_cast<std::uint32_t>(entries_.size());
    entry_at_[position] = static_cast<int>(idx);
    entries_.push_back(std::move(e));
    return idx;
  }

  std::shared_ptr<const TreeGeometry> geometry_;
  std::vector<std::uint32_t> order_;
  bool bfs_ = true;
  std::vector<int> entry_at_;
  std::vector<Entry> entries_;
};

}  // namespace wreath
