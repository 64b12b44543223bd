#include "ermu/rng.hpp"

namespace ermu {

std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> tags) noexcept {
  std::uint64_t s = splitmix64(base);
  for (std::uint64_t t : tags) s = splitmix64(s ^ splitmix64(t));
  return s;
}

Matrix standard_normal(Index rows, Index cols, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> normal;
  Matrix out(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) out(i, j) = normal(rng);
  return out;
}

Vector standard_normal(Index size, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> normal;
  Vector out(size);
  for (Index i = 0; i < size; ++i) out(i) = normal(rng);
  return out;
}

}  // namespace ermu
