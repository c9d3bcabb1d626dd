#pragma once

#include <cstdint>

#include "bodyshape/bodymodel.hpp"

namespace bodyshape {

// Truncation box for sampled populations.
inline constexpr double kSamplingBound = 3.0;

// SplitMix64 finalizer; used to derive independent per-item seeds from
// (run seed, item index) so parallel work stays reproducible.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index);

// beta ~ N(0, 1)^10 truncated to [-bound, bound], one stream per (seed, index).
ShapeParams sample_shape(std::uint64_t seed, std::uint64_t index, double bound = kSamplingBound);

}  // namespace bodyshape
