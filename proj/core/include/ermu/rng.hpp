#pragma once

#include "ermu/types.hpp"

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

namespace ermu {

using Rng = std::mt19937_64;

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// FNV-1a; used to turn textual ids (family names, stream tags) into seed material.
constexpr std::uint64_t hash_tag(std::string_view s) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Folds a sequence of tags into a base seed with splitmix64. Order matters.
std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> tags) noexcept;

/// Matrix of i.i.d. N(0,1) entries, filled row by row so that a prefix of
/// rows does not depend on the total row count.
Matrix standard_normal(Index rows, Index cols, std::uint64_t seed);
Vector standard_normal(Index size, std::uint64_t seed);

}  // namespace ermu
