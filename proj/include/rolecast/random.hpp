#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>

namespace rolecast {

using Rng = std::mt19937_64;

/// Uniform double in [0, 1) from the top 53 bits; identical on every standard library.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// Uniform integer in [lo, hi] inclusive.
inline int uniform_int(Rng& rng, int lo, int hi) {
  const auto span = static_cast<std::uint64_t>(hi - lo + 1);
  return lo + static_cast<int>(static_cast<std::uint64_t>(uniform01(rng) * static_cast<double>(span)));
}

/// Draws an index from a probability vector by inverse CDF.
inline std::size_t sample_categorical(Rng& rng, std::span<const double> probs) {
  const double u = uniform01(rng);
  double acc = 0.0;
  std::size_t last_nonzero = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] <= 0.0) continue;
    acc += probs[i];
    last_nonzero = i;
    if (u < acc) return i;
  }
  return last_nonzero;
}

/// Fisher-Yates with uniform01 so shuffles do not depend on the standard library.
template <class It>
void shuffle(It first, It last, Rng& rng) {
  const auto n = static_cast<int>(last - first);
  for (int i = n - 1; i > 0; --i) {
    const int j = uniform_int(rng, 0, i);
    std::swap(first[i], first[j]);
  }
}

}  // namespace rolecast
