#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace signcast::nn {

// Distribution helpers with a fixed algorithm, so seeded runs reproduce
// across standard library implementations.

/// Uniform in [0, 1) with 53 random bits.
inline double unit_uniform(std::mt19937_64& engine) {
  return static_cast<double>(engine() >> 11) * 0x1.0p-53;
}

/// Standard normal via Box-Muller.
inline double standard_normal(std::mt19937_64& engine) {
  const double u1 = 1.0 - unit_uniform(engine);  // (0, 1]
  const double u2 = unit_uniform(engine);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

/// Uniform integer in [0, n).
inline std::size_t uniform_index(std::mt19937_64& engine, std::size_t n) {
  return static_cast<std::size_t>(unit_uniform(engine) * static_cast<double>(n));
}

/// Fisher-Yates with uniform_index, portable across standard libraries.
template <typename Container>
void seeded_shuffle(Container& items, std::mt19937_64& engine) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const std::size_t j = uniform_index(engine, i);
    using std::swap;
    swap(items[i - 1], items[j]);
  }
}

}  // namespace signcast::nn
