#pragma once

#include <algorithm>
#include <cctype>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "wreath/error.hpp"

namespace wreath {

using Point = std::uint32_t;

/// A bijection of {0..N-1}. Points are 0-based in memory and 1-based in every
/// text form (cycle notation, image lists).
///
/// Products follow the right-action convention used everywhere in the library:
/// `p * q` applies `p` first, then `q`, so `(p * q)[i] == q[p[i]]`.
class Permutation {
 public:
  Permutation() = default;

  explicit Permutation(std::size_t degree) : images_(degree) {
    std::iota(images_.begin(), images_.end(), Point{0});
  }

  /// Takes 0-based images; throws if they are not a bijection.
  explicit Permutation(std::vector<Point> images) : images_(std::move(images)) {
    std::vector<bool> seen(images_.size(), false);
    for (Point p : images_) {
      if (p >= images_.size() || seen[p]) {
        throw Error("permutation images are not a bijection");
      }
      seen[p] = true;
    }
  }

  static Permutation identity(std::size_t degree) { return Permutation(degree); }

  /// Unchecked construction for hot loops that produce bijections by construction.
  static Permutation from_images_unchecked(std::vector<Point> images) {
    Permutation p;
    p.images_ = std::move(images);
    return p;
  }

  static Permutation from_one_based(std::span<const std::size_t> images) {
    std::vector<Point> v;
    v.reserve(images.size());
    for (std::size_t x : images) {
      if (x == 0) {
        throw Error("one-based image list contains 0");
      }
      v.push_back(static_cast<Point>(x - 1));
    }
    return Permutation(std::move(v));
  }

  /// Parses disjoint cycle notation such as "(1 2)(3 4 5)" or "()" on `degree` points.
  static Permutation parse_cycles(std::string_view text, std::size_t degree);

  std::size_t degree() const { return images_.size(); }
  Point operator[](Point i) const { return images_[i]; }
  const std::vector<Point>& images() const { return images_; }

  bool is_identity() const {
    for (std::size_t i = 0; i < images_.size(); ++i) {
      if (images_[i] != i) {
        return false;
      }
    }
    return true;
  }

  Permutation inverse() const {
    std::vector<Point> inv(images_.size());
    for (std::size_t i = 0; i < images_.size(); ++i) {
      inv[images_[i]] = static_cast<Point>(i);
    }
    return from_images_unchecked(std::move(inv));
  }

  Permutation operator*(const Permutation& other) const {
    if (other.degree() != degree()) {
      throw DegreeMismatch("permutation degrees differ: " + std::to_string(degree()) +
                           " vs " + std::to_string(other.degree()));
    }
    std::vector<Point> out(images_.size());
    const Point* a = images_.data();
    const Point* b = other.images_.data();
    for (std::size_t i = 0; i < out.size(); ++i) {
      out[i] = b[a[i]];
    }
    return from_images_unchecked(std::move(out));
  }

  Permutation& operator*=(const Permutation& other) {
    if (other.degree() != degree()) {
      throw DegreeMismatch("permutation degrees differ");
    }
    for (Point& x : images_) {
      x = other.images_[x];
    }
    return *this;
  }

  Permutation pow(long long e) const {
    Permutation base = e < 0 ? inverse() : *this;
    unsigned long long n = e < 0 ? static_cast<unsigned long long>(-(e + 1)) + 1
                                 : static_cast<unsigned long long>(e);
    Permutation result(degree());
    while (n > 0) {
      if (n & 1ULL) {
        result = result * base;
      }
      base = base * base;
      n >>= 1ULL;
    }
    return result;
  }

  /// x^{-1} y^{-1} x y
  static Permutation commutator(const Permutation& x, const Permutation& y) {
    return x.inverse() * y.inverse() * x * y;
  }

  /// g^{-1} x g
  Permutation conjugate_by(const Permutation& g) const { return g.inverse() * *this * g; }

  /// Canonical cycle notation: cycles start at their smallest point and are
  /// listed by that point; fixed points are omitted; the identity is "()".
  std::string cycles() const {
    std::string out;
    std::vector<bool> seen(images_.size(), false);
    for (std::size_t i = 0; i < images_.size(); ++i) {
      if (seen[i] || images_[i] == i) {
        continue;
      }
      out += '(';
      std::size_t j = i;
      bool first = true;
      while (!seen[j]) {
        seen[j] = true;
        if (!first) {
          out += ' ';
        }
        first = false;
        out += std::to_string(j + 1);
        j = images_[j];
      }
      out += ')';
    }
    return out.empty() ? "()" : out;
  }

  std::size_t order() const {
    std::size_t result = 1;
    std::vector<bool> seen(images_.size(), false);
    for (std::size_t i = 0; i < images_.size(); ++i) {
      if (seen[i]) {
        continue;
      }
      std::size_t len = 0;
      for (std::size_t j = i; !seen[j]; j = images_[j]) {
        seen[j] = true;
        ++len;
      }
      result = std::lcm(result, len);
    }
    return result;
  }

  friend bool operator==(const Permutation&, const Permutation&) = default;
  friend auto operator<=>(const Permutation& a, const Permutation& b) {
    return a.images_ <=> b.images_;
  }

 private:
  std::vector<Point> images_;
};

inline Permutation Permutation::parse_cycles(std::string_view text, std::size_t degree) {
  std::vector<Point> images(degree);
  std::iota(images.begin(), images.end(), Point{0});
  std::vector<bool> used(degree, false);
  std::size_t i = 0;
  auto skip_ws = [&] {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) {
      ++i;
    }
  };
  skip_ws();
  while (i < text.size()) {
    if (text[i] != '(') {
      throw Error("cycle notation: expected '(' in \"" + std::string(text) + "\"");
    }
    ++i;
    std::vector<Point> cycle;
    for (;;) {
      skip_ws();
      if (i >= text.size()) {
        throw Error("cycle notation: unterminated cycle");
      }
      if (text[i] == ')') {
        ++i;
        break;
      }
      if (!std::isdigit(static_cast<unsigned char>(text[i]))) {
        throw Error("cycle notation: unexpected character '" + std::string(1, text[i]) + "'");
      }
      std::size_t value = 0;
      while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) {
        value = value * 10 + static_cast<std::size_t>(text[i] - '0');
        if (value > degree) {
          break;
        }
        ++i;
      }
      if (value == 0 || value > degree) {
        throw Error("cycle notation: point out of range 1.." + std::to_string(degree));
      }
      Point p = static_cast<Point>(value - 1);
      if (used[p]) {
        throw Error("cycle notation: point " + std::to_string(value) + " repeated");
      }
      used[p] = true;
      cycle.push_back(p);
    }
    for (std::size_t k = 0; k < cycle.size(); ++k) {
      images[cycle[k]] = cycle[(k + 1) % cycle.size()];
    }
    skip_ws();
  }
  return from_images_unchecked(std::move(images));
}

struct PermutationHash {
  std::size_t operator()(const Permutation& p) const noexcept {
    std::size_t h = 1469598103934665603ULL;
    for (Point x : p.images()) {
      h ^= x;
      h *= 1099511628211ULL;
    }
    return h;
  }
};

}  // namespace wreath
