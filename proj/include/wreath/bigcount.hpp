#pragma once

#include <cstddef>
#include <optional>
#include <string>

#include <boost/multiprecision/cpp_int.hpp>

namespace wreath {

/// Exact non-negative group orders and indices.
using BigCount = boost::multiprecision::cpp_int;

inline std::string to_string(const BigCount& n) { return n.str(); }

inline BigCount big_pow(std::size_t base, std::size_t exp) {
  BigCount r = 1;
  for (std::size_t i = 0; i < exp; ++i) {
    r *= base;
  }
  return r;
}

/// log_p(n) when n is a power of p, otherwise nullopt.
inline std::optional<std::size_t> exact_log(BigCount n, std::size_t p) {
  if (n <= 0 || p < 2) {
    return std::nullopt;
  }
  std::size_t k = 0;
  while (n > 1) {
    if (n % p != 0) {
      return std::nullopt;
    }
    n /= p;
    ++k;
  }
  return k;
}

}  // namespace wreath
