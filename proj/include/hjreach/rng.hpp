#pragma once

#include <cstdint>
#include <random>

namespace hjreach {

// 53-bit mantissa mapping. std::uniform_real_distribution is not pinned by
// the standard, so all sampling in this library goes through these helpers
// to keep seeded runs reproducible across toolchains.
inline double uniform01(std::mt19937_64& gen) {
  return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

inline double uniform(std::mt19937_64& gen, double lo, double hi) {
  return lo + (hi - lo) * uniform01(gen);
}

}  // namespace hjreach
