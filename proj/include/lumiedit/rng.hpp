#pragma once

#include <cstdint>

namespace lumiedit {

// Stream identifiers keep the sampling strategies on independent streams so
// that enabling MIS does not perturb the area-strategy samples.
enum class Stream : std::uint32_t {
  kArea = 1,
  kAngular = 2,
  kShadow = 3,
  kGather = 4,
  kGeometry = 5,
};

inline constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Counter-based generator: every value is a pure function of
// (seed, pixel, stream, sample, dimension). There is no hidden state, so
// any pixel can be rendered by any worker in any order.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t pixel, Stream stream)
      : key_(mix64(mix64(mix64(seed) ^ pixel) ^ static_cast<std::uint64_t>(stream))) {}

  std::uint64_t bits(std::uint64_t sample, std::uint32_t dim) const {
    return mix64(key_ ^ mix64((sample << 8) ^ dim));
  }

  // Uniform in [0, 1).
  double uniform(std::uint64_t sample, std::uint32_t dim) const {
    return static_cast<double>(bits(sample, dim) >> 11) * 0x1.0p-53;
  }

  // Uniform in [-1, 1).
  double symmetric(std::uint64_t sample, std::uint32_t dim) const {
    return 2.0 * uniform(sample, dim) - 1.0;
  }

 private:
  std::uint64_t key_;
};

}  // namespace lumiedit
