#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace biasharness {

// mt19937_64 with a bounded draw defined here rather than by the standard
// library, so a seed gives the same sequence on every platform.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed) : engine_(seed) {}

  // Uniform in [0, bound). bound must be > 0.
  std::uint64_t below(std::uint64_t bound);

 private:
  std::mt19937_64 engine_;
};

// Fisher-Yates permutation of 0..n-1.
std::vector<std::size_t> shuffled_indices(std::size_t n, std::uint64_t seed);

}  // namespace biasharness
