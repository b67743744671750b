#pragma once

// Deterministic Schreier-Sims. Base points are taken greedily as the smallest
// point moved by the element that needs a new level.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <string>
#include <optional>
#include <utility>
#include <vector>

#include "wreath/bigcount.hpp"
#include "wreath/permutation.hpp"

namespace wreath {

class StabChain {
 public:
  struct Level {
    Point base_point = 0;
    std::vector<Point> orbit;
    /// transversal[i] maps base_point to orbit[i]; inverse_transversal[i] is its inverse.
    std::vector<Permutation> transversal;
    std::vector<Permutation> inverse_transversal;
    std::vector<std::int32_t> orbit_index;  ///< point -> index in orbit, or -1
  };

  StabChain() = default;

  /// `base_prefix` fixes the first base points (used for base change); the
  /// chain may keep prefix points whose basic orbit is trivial.
  StabChain(std::size_t degree, const std::vector<Permutation>& generators,
            const std::vector<Point>& base_prefix = {})
      : degree_(degree) {
    base_ = base_prefix;
    for (const Permutation& g : generators) {
      if (g.degree() != degree) {
        throw DegreeMismatch("generator degree " + std::to_string(g.degree()) +
                             " differs from group degree " + std::to_string(degree));
      }
      if (!g.is_identity() && std::find(strong_.begin(), strong_.end(), g) == strong_.end()) {
        strong_.push_back(g);
      }
    }
    for (const Permutation& g : strong_) {
      if (std::all_of(base_.begin(), base_.end(), [&](Point b) { return g[b] == b; })) {
        base_.push_back(first_moved(g));
      }
    }
    schreier_sims();
  }

  std::size_t degree() const { return degree_; }
  const std::vector<Point>& base() const { return base_; }
  const std::vector<Permutation>& strong_generators() const { return strong_; }
  const std::vector<Level>& levels() const { return levels_; }

  BigCount order() const {
    BigCount r = 1;
    for (const Level& l : levels_) {
      r *= l.orbit.size();
    }
    return r;
  }

  /// Residue of sifting g, and the level where sifting stopped (levels().size() if it passed all).
  std::pair<Permutation, std::size_t> sift(Permutation g, std::size_t from = 0) const {
    for (std::size_t i = from; i < levels_.size(); ++i) {
      const Level& l = levels_[i];
      Point beta = g[l.base_point];
      std::int32_t k = l.orbit_index[beta];
      if (k < 0) {
        return {std::move(g), i};
      }
      g = g * l.inverse_transversal[static_cast<std::size_t>(k)];
    }
    return {std::move(g), levels_.size()};
  }

  bool contains(const Permutation& g) const {
    if (g.degree() != degree_) {
      throw DegreeMismatch("membership test with a permutation of the wrong degree");
    }
    auto [res, lvl] = sift(g);
    return lvl == levels_.size() && res.is_identity();
  }

  /// Strong generators fixing the first `k` base points; they generate that stabilizer.
  std::vector<Permutation> stabilizer_generators(std::size_t k) const {
    std::vector<Permutation> out;
    for (const Permutation& g : strong_) {
      bool fixes = true;
      for (std::size_t i = 0; i < k && i < base_.size(); ++i) {
        if (g[base_[i]] != base_[i]) {
          fixes = false;
          break;
        }
      }
      if (fixes) {
        out.push_back(g);
      }
    }
    return out;
  }

  /// Drops base points with trivial basic orbits.
  void drop_redundant_base_points() {
    std::vector<Point> base;
    std::vector<Level> levels;
    for (std::size_t i = 0; i < levels_.size(); ++i) {
      if (levels_[i].orbit.size() > 1) {
        base.push_back(base_[i]);
        levels.push_back(std::move(levels_[i]));
      }
    }
    base_ = std::move(base);
    levels_ = std::move(levels);
  }

 private:
  static Point first_moved(const Permutation& g) {
    for (Point i = 0; i < g.degree(); ++i) {
      if (g[i] != i) {
        return i;
      }
    }
    return 0;
  }

  Level make_level(std::size_t i) const {
    Level l;
    l.base_point = base_[i];
    l.orbit_index.assign(degree_, -1);
    l.orbit.push_back(l.base_point);
    l.transversal.push_back(Permutation::identity(degree_));
    l.orbit_index[l.base_point] = 0;
    std::vector<Permutation> gens = stabilizer_generators(i);
    for (std::size_t j = 0; j < l.orbit.size(); ++j) {
      for (const Permutation& s : gens) {
        Point img = s[l.orbit[j]];
        if (l.orbit_index[img] < 0) {
          l.orbit_index[img] = static_cast<std::int32_t>(l.orbit.size());
          l.orbit.push_back(img);
          l.transversal.push_back(l.transversal[j] * s);
        }
      }
    }
    for (const Permutation& u : l.transversal) {
      l.inverse_transversal.push_back(u.inverse());
    }
    return l;
  }

  void rebuild_levels_from(std::size_t i) {
    levels_.resize(i);
    for (std::size_t k = i; k < base_.size(); ++k) {
      levels_.push_back(make_level(k));
    }
  }

  void schreier_sims() {
    rebuild_levels_from(0);
    std::size_t i = base_.size();
    while (i-- > 0) {
      bool restarted = false;
      const std::vector<Permutation> gens = stabilizer_generators(i);
      const Level& l = levels_[i];
      for (std::size_t j = 0; !restarted && j < l.orbit.size(); ++j) {
        for (const Permutation& s : gens) {
          Point img = s[l.orbit[j]];
          Permutation h = l.transversal[j] * s *
                          l.inverse_transversal[static_cast<std::size_t>(l.orbit_index[img])];
          if (h.is_identity()) {
            continue;
          }
          auto [res, stop] = sift(std::move(h), i + 1);
          if (stop == levels_.size() && res.is_identity()) {
            continue;
          }
          strong_.push_back(res);
          if (stop == levels_.size()) {
            base_.push_back(first_moved(res));
          }
          rebuild_levels_from(i + 1);
          i = stop + 1;  // the loop condition steps back to `stop`
          restarted = true;
          break;
        }
      }
    }
  }

  std::size_t degree_ = 0;
  std::vector<Point> base_;
  std::vector<Permutation> strong_;
  std::vector<Level> levels_;
};

}  // namespace wreath
