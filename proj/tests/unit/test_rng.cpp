#include "ermu/rng.hpp"

#include <doctest.h>

#include <set>

using namespace ermu;

TEST_CASE("splitmix64 matches the published reference sequence") {
  // First outputs of the reference generator seeded with 0.
  std::uint64_t state = 0;
  auto next = [&] {
    const std::uint64_t z = splitmix64(state);
    state += 0x9e3779b97f4a7c15ULL;
    return z;
  };
  CHECK(next() == 0xe220a8397b1dcdafULL);
  CHECK(next() == 0x6e789e6aa1b965f4ULL);
  CHECK(next() == 0x06c45d188009454fULL);
}

TEST_CASE("hash_tag is FNV-1a") {
  CHECK(hash_tag("") == 0xcbf29ce484222325ULL);
  CHECK(hash_tag("a") == 0xaf63dc4c8601ec8cULL);
}

TEST_CASE("derive_seed depends on every tag and on their order") {
  std::set<std::uint64_t> seen;
  for (std::uint64_t a = 0; a < 20; ++a)
    for (std::uint64_t b = 0; b < 20; ++b) seen.insert(derive_seed(42, {a, b}));
  CHECK(seen.size() == 400);
  CHECK(derive_seed(1, {2, 3}) != derive_seed(1, {3, 2}));
  CHECK(derive_seed(1, {2, 3}) == derive_seed(1, {2, 3}));
}

TEST_CASE("standard_normal is reproducible and row-prefix stable") {
  const Matrix a = standard_normal(50, 7, 9);
  const Matrix b = standard_normal(80, 7, 9);
  CHECK(a == b.topRows(50));
  CHECK(a == standard_normal(50, 7, 9));
  CHECK(a != standard_normal(50, 7, 10));
}

TEST_CASE("standard_normal moments") {
  const Vector v = standard_normal(200000, 3);
  const double mean = v.mean();
  const double var = (v.array() - mean).square().mean();
  CHECK(std::abs(mean) < 0.01);
  CHECK(std::abs(var - 1.0) < 0.01);
}
