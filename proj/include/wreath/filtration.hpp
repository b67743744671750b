#pragma once

// Level quotients G_n = G/st_G(n) of a defined group and the subgroup
// computations done inside them: images of named subgroups, level and rigid
// stabilizers, coset tests modulo level stabilizers, congruence scans and the
// hypothesis checker for the branch-group criterion.
//
// Everything here is exact at a fixed level. Statements about the infinite
// group are only ever reported as evidence up to the levels checked.

#include <algorithm>
#include <chrono>
#include <cstddef>
#include <functional>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "wreath/bigcount.hpp"
#include "wreath/dsl.hpp"
#include "wreath/error.hpp"
#include "wreath/mealy.hpp"
#include "wreath/perm_group.hpp"
#include "wreath/permutation.hpp"
#include "wreath/vertex.hpp"

namespace wreath {

struct LevelContext {
  std::size_t level = 0;
  std::size_t points = 1;  ///< d^level
  PermGroup quotient;
  std::map<std::string, Permutation> element_table;  ///< generator name -> truncation
};

/// Persistent store for level quotients, keyed by definition hash and level.
class QuotientStore {
 public:
  virtual ~QuotientStore() = default;
  virtual std::optional<PermGroup> load(const std::string& hash, std::size_t level) = 0;
  virtual void store(const std::string& hash, std::size_t level, const PermGroup& g) = 0;
};

// ---------------------------------------------------------------------------
// Permutation helpers between levels

/// Action on level n of a level-m permutation of tree leaves (n <= m).
inline Permutation project(const Permutation& p, std::size_t degree, std::size_t m, std::size_t n) {
  const std::size_t block = checked_power(degree, m - n, SIZE_MAX / 2);
  const std::size_t count = p.degree() / block;
  std::vector<Point> images(count);
  for (std::size_t i = 0; i < count; ++i) {
    images[i] = static_cast<Point>(p[static_cast<Point>(i * block)] / block);
  }
  return Permutation::from_images_unchecked(std::move(images));
}

/// Whether p fixes every vertex of level 1.
inline bool fixes_first_level(const Permutation& p, std::size_t degree) {
  const std::size_t block = p.degree() / degree;
  for (Point i = 0; i < p.degree(); ++i) {
    if (p[i] / block != i / block) {
      return false;
    }
  }
  return true;
}

/// Section at child x (0-based) of a permutation fixing level 1.
inline Permutation restrict_to_child(const Permutation& p, std::size_t degree, std::size_t x) {
  const std::size_t block = p.degree() / degree;
  std::vector<Point> images(block);
  const Point offset = static_cast<Point>(x * block);
  for (std::size_t i = 0; i < block; ++i) {
    images[i] = p[offset + static_cast<Point>(i)] - offset;
  }
  return Permutation::from_images_unchecked(std::move(images));
}

/// Permutation of blocks * deg(h) points acting as h on block x (0-based) and trivially elsewhere.
inline Permutation embed_in_block(const Permutation& h, std::size_t blocks, std::size_t x) {
  const std::size_t block = h.degree();
  std::vector<Point> images(block * blocks);
  for (std::size_t i = 0; i < images.size(); ++i) {
    images[i] = static_cast<Point>(i);
  }
  const Point offset = static_cast<Point>(x * block);
  for (std::size_t i = 0; i < block; ++i) {
    images[offset + i] = offset + h[static_cast<Point>(i)];
  }
  return Permutation::from_images_unchecked(std::move(images));
}

/// Level-(m+1) permutation acting as h (level m) below child x (0-based) and trivially elsewhere.
inline Permutation embed_permutation(const Permutation& h, std::size_t degree, std::size_t x) {
  return embed_in_block(h, degree, x);
}

// ---------------------------------------------------------------------------
// Reports

struct LevelFact {
  std::size_t n = 0;      ///< st(n)
  std::size_t level = 0;  ///< quotient level where it was checked
  bool contained = false;
  std::optional<Permutation> escaping;  ///< generator of st(n)_level outside N_level
};

struct ScanReport {
  std::string target;
  std::size_t max_level = 0;
  bool found = false;
  std::size_t found_level = 0;
  bool exact = false;  ///< the expression contains st(found_level) by construction
  std::vector<LevelFact> facts;
  double seconds = 0;

  std::string verdict() const {
    return found ? "Found(" + std::to_string(found_level) + ")"
                 : "NotContainedUpTo(" + std::to_string(max_level) + ")";
  }
};

struct Hypothesis {
  std::string id;
  std::string description;
  bool skipped = false;
  bool passed = true;
  std::string strength;  ///< "exact" or "evidence"
  std::vector<std::size_t> levels;
  std::vector<std::string> certificates;
};

struct Theorem1Report {
  std::string r;
  std::string h;
  std::size_t depth = 0;
  std::vector<Hypothesis> hypotheses;
  double seconds = 0;

  bool passed() const {
    for (const Hypothesis& h : hypotheses) {
      if (!h.skipped && !h.passed) {
        return false;
      }
    }
    return true;
  }
};

namespace detail {

/// Memoizes values computed once per key, safe under concurrent callers.
template <class Key, class Value>
class OnceMap {
 public:
  Value get(const Key& key, const std::function<Value()>& make) {
    std::promise<Value> promise;
    std::shared_future<Value> future;
    bool owner = false;
    {
      std::lock_guard<std::mutex> lock(mutex_);
      auto it = map_.find(key);
      if (it != map_.end()) {
        future = it->second;
      } else {
        future = promise.get_future().share();
        map_.emplace(key, future);
        owner = true;
      }
    }
    if (owner) {
      try {
        promise.set_value(make());
      } catch (...) {
        promise.set_exception(std::current_exception());
        std::lock_guard<std::mutex> lock(mutex_);
        map_.erase(key);
      }
    }
    return future.get();
  }

 private:
  std::mutex mutex_;
  std::map<Key, std::shared_future<Value>> map_;
};

inline bool structurally_normal(const SubExpr& s, const GroupDefinition& def) {
  using K = SubExpr::Kind;
  switch (s.kind) {
    case K::whole:
    case K::ncl:
    case K::stab:
    case K::rist_level:
      return true;
    case K::derived:
    case K::gamma:
      return structurally_normal(*s.subs[0], def);
    case K::join:
      return structurally_normal(*s.subs[0], def) && structurally_normal(*s.subs[1], def);
    case K::ref:
      return structurally_normal(*def.find_subgroup(s.name)->body, def);
    case K::gens:
    case K::rist:
      return false;
  }
  return false;
}

/// Smallest k with st(k) <= N by construction of the expression, if any.
inline std::optional<std::size_t> structural_stab_bound(const SubExpr& s, const GroupDefinition& def) {
  using K = SubExpr::Kind;
  switch (s.kind) {
    case K::whole:
      return 0;
    case K::stab:
      return s.n;
    case K::join: {
      auto a = structural_stab_bound(*s.subs[0], def);
      auto b = structural_stab_bound(*s.subs[1], def);
      if (a && b) {
        return std::min(*a, *b);
      }
      return a ? a : b;
    }
    case K::ref:
      return structural_stab_bound(*def.find_subgroup(s.name)->body, def);
    default:
      return std::nullopt;
  }
}

}  // namespace detail

class Session {
 public:
  explicit Session(GroupDefinition def, Limits limits = {},
                   std::shared_ptr<QuotientStore> store = nullptr)
      : def_(std::move(def)),
        limits_(limits),
        resolution_(resolve(def_, limits_)),
        hash_(content_hash(def_)),
        store_(std::move(store)) {}

  Session(const Session&) = delete;
  Session& operator=(const Session&) = delete;

  const GroupDefinition& definition() const { return def_; }
  const Resolution& resolution() const { return resolution_; }
  const Limits& limits() const { return limits_; }
  std::size_t degree() const { return def_.degree; }
  const std::string& hash() const { return hash_; }

  Element element(const ElemExpr& e) const { return compile_element(e, resolution_, limits_); }
  Element element(std::string_view text) const { return element(*parse_element(text, def_)); }
  SubPtr subgroup(std::string_view text) const { return parse_subgroup(text, def_); }

  std::size_t points(std::size_t n) const {
    check_level(n);
    return checked_power(degree(), n, limits_.point_cap);
  }

  Permutation truncation(const Element& g, std::size_t n) const {
    check_level(n);
    return truncate(g, n, limits_);
  }

  std::optional<TreeLayout> layout(std::size_t n) const {
    if (n == 0) {
      return std::nullopt;
    }
    return TreeLayout{degree(), n};
  }

  /// G_n, built from the truncated generators (or loaded from the store).
  std::shared_ptr<const LevelContext> level_quotient(std::size_t n) const {
    check_level(n);
    return levels_.get(n, [&] {
      auto ctx = std::make_shared<LevelContext>();
      ctx->level = n;
      ctx->points = points(n);
      std::vector<Permutation> gens;
      for (const GenDecl& g : def_.generators) {
        Permutation p = truncate(resolution_.at(g.name), n, limits_);
        ctx->element_table.emplace(g.name, p);
        gens.push_back(p);
      }
      std::optional<PermGroup> loaded;
      if (store_) {
        loaded = store_->load(hash_, n);
        if (loaded && (loaded->degree() != ctx->points ||
                       !std::all_of(gens.begin(), gens.end(),
                                    [&](const Permutation& p) { return loaded->contains(p); }) ||
                       !std::all_of(loaded->generators().begin(), loaded->generators().end(),
                                    [&](const Permutation& p) {
                                      return std::find(gens.begin(), gens.end(), p) != gens.end();
                                    }))) {
          loaded.reset();  // stale entry; recompute
        }
      }
      if (loaded) {
        ctx->quotient = std::move(*loaded);
      } else {
        ctx->quotient = build(gens, ctx->points, layout(n));
        if (store_) {
          store_->store(hash_, n, ctx->quotient);
        }
      }
      return std::shared_ptr<const LevelContext>(std::move(ctx));
    });
  }

  /// Image of st_G(n) in G_m: the elements acting trivially on level n.
  PermGroup stab_image(std::size_t m, std::size_t n) const {
    if (n > m) {
      throw OutOfRange("stab_image: level " + std::to_string(n) + " exceeds quotient level " +
                       std::to_string(m));
    }
    const PermGroup& q = level_quotient(m)->quotient;
    if (n == 0) {
      return q;
    }
    if (q.is_tree()) {
      return level_stabilizer(q, n);
    }
    return kernel_on_level(q, m, n);
  }

  /// Elements of G_m fixing every leaf outside the subtree at v.
  PermGroup rigid_stab(std::size_t m, const Vertex& v) const {
    v.check(degree());
    if (v.level() >= m && m > 0) {
      throw OutOfRange("rigid_stab: vertex " + v.str() + " is not above level " + std::to_string(m));
    }
    const PermGroup& q = level_quotient(m)->quotient;
    if (v.is_root()) {
      return q;
    }
    const std::size_t block = checked_power(degree(), m - v.level(), SIZE_MAX / 2);
    const std::size_t start = vertex_index(v, degree()) * block;
    std::vector<Point> outside;
    for (std::size_t i = 0; i < q.degree(); ++i) {
      if (i < start || i >= start + block) {
        outside.push_back(static_cast<Point>(i));
      }
    }
    return pointwise_stabilizer(q, outside);
  }

  /// Image in G_m of the subgroup an expression defines.
  PermGroup eval(const SubExpr& e, std::size_t m) const {
    const std::string key = to_string(e) + "@" + std::to_string(m);
    return evals_.get(key, [&] { return eval_uncached(e, m); });
  }
  PermGroup eval(std::string_view text, std::size_t m) const { return eval(*subgroup(text), m); }

  /// g in N st_G(n).
  bool coset_member(const Element& g, const SubExpr& n_expr, std::size_t n) const {
    return eval(n_expr, n).contains(truncation(g, n));
  }

  /// |G : N st_G(n)| = |G_n : N_n|.
  BigCount quotient_index(const SubExpr& n_expr, std::size_t n) const {
    return index(level_quotient(n)->quotient, eval(n_expr, n));
  }

  /// g fixes level 1 and each first-level section lies in H st_G(n-1).
  bool pullback_member(const Element& g, const SubExpr& h, std::size_t n) const {
    if (n == 0) {
      throw OutOfRange("pullback_member needs n >= 1");
    }
    if (!g.root_permutation().is_identity()) {
      return false;
    }
    const PermGroup hq = eval(h, n - 1);
    for (std::size_t x = 1; x <= degree(); ++x) {
      if (!hq.contains(truncation(section(g, Vertex{x}), n - 1))) {
        return false;
      }
    }
    return true;
  }

  /// Same test for an element of G_n given by its level-n permutation.
  bool pullback_member(const Permutation& p, const SubExpr& h, std::size_t n) const {
    if (n == 0) {
      throw OutOfRange("pullback_member needs n >= 1");
    }
    if (p.degree() != points(n)) {
      throw DegreeMismatch("pullback_member: permutation is not on level " + std::to_string(n));
    }
    if (!fixes_first_level(p, degree())) {
      return false;
    }
    const PermGroup hq = eval(h, n - 1);
    for (std::size_t x = 0; x < degree(); ++x) {
      if (!hq.contains(restrict_to_child(p, degree(), x))) {
        return false;
      }
    }
    return true;
  }

  /// For each 1-based coordinate i: section(g, i) in H st_G(n-1).
  std::vector<bool> section_coset_profile(const Element& g, const SubExpr& h,
                                          const std::vector<std::size_t>& coords, std::size_t n) const {
    if (n == 0) {
      throw OutOfRange("section profile needs n >= 1");
    }
    if (!g.root_permutation().is_identity()) {
      throw Error("section profile: element moves the first level");
    }
    const PermGroup hq = eval(h, n - 1);
    std::vector<bool> out;
    for (std::size_t c : coords) {
      Vertex v{c};
      v.check(degree());
      out.push_back(hq.contains(truncation(section(g, v), n - 1)));
    }
    return out;
  }

  /// Binary trees: section(g,1) section(g,2) in H st_G(n-1).
  bool sections_product_check(const Element& g, const SubExpr& h, std::size_t n) const {
    if (degree() != 2) {
      throw Error("sections product check is defined for the binary tree only");
    }
    if (n == 0) {
      throw OutOfRange("sections product check needs n >= 1");
    }
    if (!g.root_permutation().is_identity()) {
      throw Error("sections product check: element moves the first level");
    }
    Element prod = compose(section(g, Vertex{1}), section(g, Vertex{2}), limits_);
    return eval(h, n - 1).contains(truncation(prod, n - 1));
  }

  /// Smallest n <= m with st(n)_l <= N_l for every level l in (n, m].
  ScanReport congruence_scan(const SubExpr& target, std::size_t m) const {
    auto t0 = std::chrono::steady_clock::now();
    ScanReport r;
    r.target = to_string(target);
    r.max_level = m;
    const auto bound = detail::structural_stab_bound(target, def_);
    for (std::size_t n = 0; n <= m && !r.found; ++n) {
      if (bound && *bound <= n) {
        r.found = true;
        r.found_level = n;
        r.exact = true;
        for (std::size_t l = n + 1; l <= m; ++l) {
          r.facts.push_back(containment(target, n, l));
        }
        break;
      }
      if (n == m) {
        break;  // st(m) is trivial in G_m: nothing to check
      }
      std::vector<LevelFact> facts;
      bool ok = true;
      for (std::size_t l = n + 1; l <= m; ++l) {
        LevelFact f = containment(target, n, l);
        facts.push_back(f);
        if (!f.contained) {
          ok = false;
          break;  // containment at a level implies it at every lower level
        }
      }
      if (ok) {
        r.found = true;
        r.found_level = n;
        r.facts.insert(r.facts.end(), facts.begin(), facts.end());
      } else {
        r.facts.push_back(facts.back());
      }
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return r;
  }

  /// Hypotheses of the criterion R >= H >= R' >= L = psi^-1(H x ... x H) at levels 1..m.
  Theorem1Report theorem1_check(const SubExpr& r_expr, const SubExpr& h_expr,
                                const std::optional<std::vector<ElemPtr>>& l_gens, std::size_t m) const {
    auto t0 = std::chrono::steady_clock::now();
    Theorem1Report rep;
    rep.r = to_string(r_expr);
    rep.h = to_string(h_expr);
    rep.depth = m;
    auto derived_r = std::make_shared<SubExpr>();
    derived_r->kind = SubExpr::Kind::derived;
    derived_r->subs = {std::make_shared<SubExpr>(r_expr)};
    const std::size_t d = degree();

    Hypothesis branch{"i", "psi(R) >= R x ... x R: generators of R at level l-1 embedded below each first-level vertex lie in R at level l"};
    branch.strength = "evidence";
    Hypothesis branch_el{"i-elements", "embed_at(r, v) lies in G for each element generator r of R and first-level v"};
    branch_el.strength = "exact";
    Hypothesis normal{"ii", "H is normal in G: conjugates of H's generators by G's generators lie in H"};
    normal.strength = "evidence";
    Hypothesis between{"iii", "R >= H >= R': generators of H lie in R and generators of R' lie in H"};
    between.strength = "evidence";
    Hypothesis pull{"iv", "each supplied L-generator fixes level 1 with all first-level sections in H"};
    pull.strength = "evidence";
    Hypothesis lin{"v", "each supplied L-generator lies in R'"};
    lin.strength = "evidence";
    Hypothesis lperm{"v-levels", "L <= R': generators of H at level l-1 embedded below each first-level vertex lie in R' at level l"};
    lperm.strength = "evidence";

    const std::optional<std::vector<Element>> r_elements = element_generators(r_expr);
    if (!r_elements) {
      branch_el.skipped = true;
      branch_el.certificates.push_back("R has no element generators in this definition");
    }
    if (!l_gens) {
      pull.skipped = true;
      lin.skipped = true;
    }
    std::vector<Element> l_elements;
    if (l_gens) {
      for (const ElemPtr& e : *l_gens) {
        l_elements.push_back(element(*e));
      }
    }
    auto fail = [](Hypothesis& h, std::size_t l, const std::string& what) {
      h.passed = false;
      if (h.certificates.size() < 8) {
        h.certificates.push_back("level " + std::to_string(l) + ": " + what);
      }
    };
    for (std::size_t l = 1; l <= m; ++l) {
      const PermGroup& q = level_quotient(l)->quotient;
      const PermGroup r_l = eval(r_expr, l);
      const PermGroup h_l = eval(h_expr, l);
      const PermGroup rd_l = eval(*derived_r, l);
      const PermGroup r_prev = eval(r_expr, l - 1);
      const PermGroup h_prev = eval(h_expr, l - 1);
      for (Hypothesis* h : {&branch, &branch_el, &normal, &between, &pull, &lin, &lperm}) {
        if (!h->skipped) {
          h->levels.push_back(l);
        }
      }
      for (const Permutation& g : r_prev.generators()) {
        for (std::size_t x = 0; x < d && branch.passed; ++x) {
          Permutation e = embed_permutation(g, d, x);
          if (!r_l.contains(e)) {
            fail(branch, l, "generator " + g.cycles() + " of R at level " + std::to_string(l - 1) +
                                " embedded below vertex " + std::to_string(x + 1) + " is not in R");
          }
        }
      }
      if (r_elements) {
        for (const Element& g : *r_elements) {
          for (std::size_t x = 1; x <= d; ++x) {
            if (!q.contains(truncation(embed_at(g, Vertex{x}), l))) {
              fail(branch_el, l, "an R-generator embedded at vertex " + std::to_string(x) + " is not in G");
            }
          }
        }
      }
      for (const Permutation& g : h_l.generators()) {
        for (const Permutation& x : q.generators()) {
          Permutation c = g.conjugate_by(x);
          if (!h_l.contains(c)) {
            fail(normal, l, "conjugate " + c.cycles() + " of H-generator " + g.cycles() + " by " +
                                x.cycles() + " is not in H");
          }
        }
      }
      for (const Permutation& g : h_l.generators()) {
        if (!r_l.contains(g)) {
          fail(between, l, "H-generator " + g.cycles() + " is not in R");
        }
      }
      for (const Permutation& g : rd_l.generators()) {
        if (!h_l.contains(g)) {
          fail(between, l, "R'-generator " + g.cycles() + " is not in H");
        }
      }
      for (std::size_t i = 0; i < l_elements.size(); ++i) {
        const std::string name = to_string(*(*l_gens)[i]);
        if (!pullback_member(l_elements[i], h_expr, l)) {
          fail(pull, l, name + " is not in the pullback of H");
        }
        if (!rd_l.contains(truncation(l_elements[i], l))) {
          fail(lin, l, name + " is not in R'");
        }
      }
      for (const Permutation& g : h_prev.generators()) {
        for (std::size_t x = 0; x < d; ++x) {
          Permutation e = embed_permutation(g, d, x);
          if (!rd_l.contains(e)) {
            fail(lperm, l, "generator " + g.cycles() + " of H at level " + std::to_string(l - 1) +
                               " embedded below vertex " + std::to_string(x + 1) + " is not in R'");
          }
        }
      }
    }
    rep.hypotheses = {branch, branch_el, normal, between, pull, lin, lperm};
    rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rep;
  }

  /// Elements generating the subgroup as a normal subgroup, when the expression
  /// determines them (G, gens, ncl, and derived/gamma terms of G).
  std::optional<std::vector<Element>> element_generators(const SubExpr& e) const {
    using K = SubExpr::Kind;
    std::vector<Element> gens;
    for (const GenDecl& g : def_.generators) {
      gens.push_back(resolution_.at(g.name));
    }
    switch (e.kind) {
      case K::whole:
        return gens;
      case K::gens:
      case K::ncl: {
        std::vector<Element> out;
        for (const ElemPtr& x : e.elems) {
          out.push_back(element(*x));
        }
        return out;
      }
      case K::derived:
      case K::gamma: {
        if (e.subs[0]->kind != K::whole) {
          return std::nullopt;
        }
        // gamma_{k+1}(G) is normally generated by [c, x], c normal generators of gamma_k, x generators of G.
        const std::size_t steps = e.kind == K::derived ? 2 : e.n;
        std::vector<Element> cur = gens;
        for (std::size_t k = 1; k < steps; ++k) {
          std::vector<Element> next;
          for (const Element& c : cur) {
            for (const Element& x : gens) {
              Element z = commutator(c, x, limits_);
              if (!is_identity(z)) {
                next.push_back(z);
              }
            }
          }
          cur = std::move(next);
        }
        return cur;
      }
      case K::ref:
        return element_generators(*def_.find_subgroup(e.name)->body);
      default:
        return std::nullopt;
    }
  }

 private:
  void check_level(std::size_t n) const {
    if (n > limits_.max_level) {
      throw PointCapExceeded("level " + std::to_string(n) + " exceeds the maximum level " +
                             std::to_string(limits_.max_level));
    }
    if (checked_power(degree(), n, limits_.point_cap) > limits_.point_cap) {
      throw PointCapExceeded("level " + std::to_string(n) + " needs more than " +
                             std::to_string(limits_.point_cap) + " points");
    }
  }

  LevelFact containment(const SubExpr& target, std::size_t n, std::size_t l) const {
    LevelFact f;
    f.n = n;
    f.level = l;
    const PermGroup st = stab_image(l, n);
    const PermGroup nl = eval(target, l);
    f.contained = true;
    for (const Permutation& g : st.generators()) {
      if (!nl.contains(g)) {
        f.contained = false;
        f.escaping = g;
        break;
      }
    }
    return f;
  }

  /// Kernel of the action on level n, for groups without the tree table: the
  /// group is extended by its action on level-n vertices, whose points are
  /// then fixed one by one.
  PermGroup kernel_on_level(const PermGroup& q, std::size_t m, std::size_t n) const {
    const std::size_t leaves = q.degree();
    const std::size_t verts = checked_power(degree(), n, SIZE_MAX / 2);
    auto extend = [&](const Permutation& p) {
      std::vector<Point> images(p.images());
      Permutation top = project(p, degree(), m, n);
      for (std::size_t i = 0; i < verts; ++i) {
        images.push_back(static_cast<Point>(leaves + top[static_cast<Point>(i)]));
      }
      return Permutation::from_images_unchecked(std::move(images));
    };
    std::vector<Permutation> ext;
    for (const Permutation& g : q.strong_generators()) {
      ext.push_back(extend(g));
    }
    PermGroup big = build(ext, leaves + verts);
    std::vector<Point> fix;
    for (std::size_t i = 0; i < verts; ++i) {
      fix.push_back(static_cast<Point>(leaves + i));
    }
    PermGroup k = pointwise_stabilizer(big, fix);
    std::vector<Permutation> gens;
    for (const Permutation& g : k.generators()) {
      std::vector<Point> images(g.images().begin(), g.images().begin() + static_cast<long>(leaves));
      gens.push_back(Permutation::from_images_unchecked(std::move(images)));
    }
    return build(gens, leaves);
  }

  PermGroup trivial(std::size_t m) const { return build({}, points(m), layout(m)); }

  std::vector<Permutation> truncations(const std::vector<ElemPtr>& elems, std::size_t m) const {
    std::vector<Permutation> out;
    for (const ElemPtr& e : elems) {
      out.push_back(truncation(element(*e), m));
    }
    return out;
  }

  /// [A, B] inside `within`, for A and B normal in it.
  static PermGroup commutator_within(const PermGroup& within, const PermGroup& a, const PermGroup& b) {
    return commutator_subgroup(within, a, b);
  }

  PermGroup eval_uncached(const SubExpr& e, std::size_t m) const {
    using K = SubExpr::Kind;
    const PermGroup& q = level_quotient(m)->quotient;
    switch (e.kind) {
      case K::whole:
        return q;
      case K::gens:
        return build(truncations(e.elems, m), q.degree(), layout(m));
      case K::ncl:
        return normal_closure(q, truncations(e.elems, m));
      case K::derived: {
        PermGroup x = eval(*e.subs[0], m);
        const bool normal = detail::structurally_normal(*e.subs[0], def_);
        // For a subgroup that is not normal in G its derived subgroup is formed inside itself.
        return commutator_within(normal ? q : x, x, x);
      }
      case K::gamma: {
        PermGroup x = eval(*e.subs[0], m);
        const bool normal = detail::structurally_normal(*e.subs[0], def_);
        PermGroup cur = x;
        for (std::size_t k = 1; k < e.n; ++k) {
          if (cur.is_trivial()) {
            break;
          }
          cur = commutator_within(normal ? q : x, cur, x);
        }
        return cur;
      }
      case K::join:
        return join(eval(*e.subs[0], m), eval(*e.subs[1], m));
      case K::stab:
        return e.n >= m ? trivial(m) : stab_image(m, e.n);
      case K::rist:
        if (e.vertex.level() >= m && !e.vertex.is_root()) {
          return trivial(m);
        }
        return rigid_stab(m, e.vertex);
      case K::rist_level: {
        if (e.n >= m) {
          return e.n == 0 ? q : trivial(m);
        }
        PermGroup acc = trivial(m);
        for (const Vertex& v : level_vertices(e.n, degree())) {
          acc = join(acc, rigid_stab(m, v));
        }
        return acc;
      }
      case K::ref: {
        const SubDecl* s = def_.find_subgroup(e.name);
        if (s == nullptr) {
          throw Error("unknown subgroup '" + e.name + "'");
        }
        return eval(*s->body, m);
      }
    }
    throw Error("unhandled subgroup expression");
  }

  GroupDefinition def_;
  Limits limits_;
  Resolution resolution_;
  std::string hash_;
  std::shared_ptr<QuotientStore> store_;
  mutable detail::OnceMap<std::size_t, std::shared_ptr<const LevelContext>> levels_;
  mutable detail::OnceMap<std::string, PermGroup> evals_;
};

}  // namespace wreath
