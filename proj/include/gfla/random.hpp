#pragma once

#include <complex>
#include <cstdint>
#include <random>

namespace gfla {

using Rng = std::mt19937_64;

// Named random streams forked from one realization seed. Environment
// streams are consumed identically whatever controller drives the devices,
// so paired runs see common random numbers.
enum class Stream : std::uint64_t {
  kTopology = 1,
  kFading = 2,
  kTraffic = 3,
  kContention = 4,
  kPhy = 5,
  kPolicy = 6,
  kTraining = 7,
  kInit = 8,
};

inline Rng make_stream(std::uint64_t seed, Stream stream, std::uint64_t sub = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(sub),
                    static_cast<std::uint32_t>(sub >> 32)};
  return Rng(seq);
}

// Circularly symmetric complex normal with the given total variance.
inline std::complex<double> complex_normal(Rng& rng, double variance) {
  std::normal_distribution<double> normal(0.0, 1.0);
  const double s = std::sqrt(variance / 2.0);
  const double re = normal(rng);
  const double im = normal(rng);
  return {s * re, s * im};
}

inline double uniform01(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

}  // namespace gfla
