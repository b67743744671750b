#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "wreath/error.hpp"

namespace wreath {

/// A vertex of the d-regular rooted tree, as a path of 1-based child indices.
/// The empty path is the root; the level is the path length.
struct Vertex {
  std::vector<std::size_t> path;

  Vertex() = default;
  Vertex(std::initializer_list<std::size_t> p) : path(p) {}
  explicit Vertex(std::vector<std::size_t> p) : path(std::move(p)) {}

  std::size_t level() const { return path.size(); }
  bool is_root() const { return path.empty(); }

  void check(std::size_t degree) const {
    for (std::size_t x : path) {
      if (x < 1 || x > degree) {
        throw OutOfRange("vertex entry " + std::to_string(x) + " outside 1.." +
                         std::to_string(degree));
      }
    }
  }

  Vertex child(std::size_t x) const {
    Vertex v = *this;
    v.path.push_back(x);
    return v;
  }

  Vertex concat(const Vertex& w) const {
    Vertex v = *this;
    v.path.insert(v.path.end(), w.path.begin(), w.path.end());
    return v;
  }

  /// Dotted form "1.2.1"; the root is ".".
  std::string str() const {
    if (path.empty()) {
      return ".";
    }
    std::string out;
    for (std::size_t i = 0; i < path.size(); ++i) {
      if (i > 0) {
        out += '.';
      }
      out += std::to_string(path[i]);
    }
    return out;
  }

  friend bool operator==(const Vertex&, const Vertex&) = default;
  friend auto operator<=>(const Vertex&, const Vertex&) = default;
};

/// Lexicographic 0-based position of a vertex among the d^n vertices of its level.
/// The 1-based leaf index used in text output is this value plus one.
inline std::size_t vertex_index(const Vertex& v, std::size_t degree) {
  std::size_t idx = 0;
  for (std::size_t x : v.path) {
    idx = idx * degree + (x - 1);
  }
  return idx;
}

inline Vertex vertex_at(std::size_t index, std::size_t level, std::size_t degree) {
  std::vector<std::size_t> path(level);
  for (std::size_t k = level; k-- > 0;) {
    path[k] = index % degree + 1;
    index /= degree;
  }
  return Vertex(std::move(path));
}

/// All vertices of one level in lexicographic order.
inline std::vector<Vertex> level_vertices(std::size_t level, std::size_t degree) {
  std::size_t count = 1;
  for (std::size_t k = 0; k < level; ++k) {
    count *= degree;
  }
  std::vector<Vertex> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    out.push_back(vertex_at(i, level, degree));
  }
  return out;
}

inline std::size_t checked_power(std::size_t base, std::size_t exp, std::size_t cap) {
  std::size_t r = 1;
  for (std::size_t k = 0; k < exp; ++k) {
    if (r > cap / base) {
      return cap + 1;
    }
    r *= base;
  }
  return r;
}

}  // namespace wreath
