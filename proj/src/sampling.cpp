#include "bodyshape/sampling.hpp"

#include <random>

namespace bodyshape {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

ShapeParams sample_shape(std::uint64_t seed, std::uint64_t index, double bound) {
  std::mt19937_64 gen(mix_seed(seed, index));
  std::normal_distribution<double> normal(0.0, 1.0);
  std::array<double, kNumBetas> v{};
  for (double& x : v) {
    do {
      x = normal(gen);
    } while (std::abs(x) > bound);
  }
  return ShapeParams(v);
}

}  // namespace bodyshape
