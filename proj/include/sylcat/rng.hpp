#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <utility>

namespace sylcat {

// splitmix64 finalizer (Steele, Lea & Flood).
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * UINT64_C(0xBF58476D1CE4E5B9);
  z = (z ^ (z >> 27)) * UINT64_C(0x94D049BB133111EB);
  return z ^ (z >> 31);
}

/// Small, fast generator with 64 bits of state. Satisfies
/// UniformRandomBitGenerator so it can drive std distributions, although the
/// helpers below are preferred because their output is fixed across
/// standard-library implementations.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  explicit constexpr SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  constexpr result_type operator()() noexcept {
    state_ += UINT64_C(0x9E3779B97F4A7C15);
    return mix64(state_);
  }

 private:
  std::uint64_t state_;
};

/// Purposes for derived streams. Each (purpose, a, b) triple names one
/// independent stream under a master seed, so draws never depend on the order
/// in which parallel work is scheduled.
enum class StreamPurpose : std::uint64_t {
  InitialPopulation = 1,
  Selection = 2,
  Crossover = 3,
  Mutation = 4,
  Holdout = 5,
  FoldSplit = 6,
  Pairing = 7,
};

constexpr SplitMix64 derive_stream(std::uint64_t master, StreamPurpose purpose, std::uint64_t a = 0,
                                   std::uint64_t b = 0) noexcept {
  std::uint64_t h = mix64(master ^ UINT64_C(0x5F3759DF5F3759DF));
  h = mix64(h ^ (static_cast<std::uint64_t>(purpose) * UINT64_C(0x9E3779B97F4A7C15)));
  h = mix64(h ^ (a + UINT64_C(0xD1B54A32D192ED03)));
  h = mix64(h ^ (b + UINT64_C(0x8CB92BA72F3D8DD7)));
  return SplitMix64(h);
}

/// Uniform integer in [0, bound); bound must be > 0. Rejection sampling keeps
/// it exactly uniform.
template <class Rng>
std::uint64_t uniform_below(Rng& rng, std::uint64_t bound) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % bound;
}

/// Uniform double in [0, 1) with 53 random bits.
template <class Rng>
double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

template <class Rng>
bool bernoulli(Rng& rng, double p) {
  return uniform01(rng) < p;
}

/// Fisher-Yates; fixed algorithm so results match everywhere.
template <class T, class Rng>
void shuffle(std::span<T> items, Rng& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(uniform_below(rng, i));
    std::swap(items[i - 1], items[j]);
  }
}

}  // namespace sylcat
