#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace fairimb {

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

/// splitmix64 output scrambler (Steele, Lea & Flood 2014).
inline constexpr std::uint64_t scramble64(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xBF58476D1CE4E5B9ull;
  z ^= z >> 27;
  z *= 0x94D049BB133111EBull;
  z ^= z >> 31;
  return z;
}

/// Derives an independent sub-stream seed: scramble64(base + kGolden * (tag + 1)).
/// Used for per-epoch shuffles, per-sweep-row seeds and the data/split/train
/// streams inside an experiment, so streams never depend on call order.
inline constexpr std::uint64_t mix_seed(std::uint64_t base, std::uint64_t tag) {
  return scramble64(base + kGolden * (tag + 1));
}

/// Counter-based generator: the k-th output is scramble64(seed + k * kGolden)
/// (splitmix64 over a Weyl sequence). Normal deviates use Box-Muller and
/// consume exactly two uniforms per call, no caching, so every stream is a
/// pure function of (seed, call sequence) and reproducible in any language.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    state_ += kGolden;
    return scramble64(state_);
  }

  /// Uniform in [0, 1) with 53 random mantissa bits.
  double uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  /// Standard normal via Box-Muller; consumes two uniforms.
  double normal() {
    const double u1 = 1.0 - uniform01();  // (0, 1], keeps log finite
    const double u2 = uniform01();
    constexpr double two_pi = 6.283185307179586476925286766559;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
  }

  /// Uniform index in [0, bound); plain modulo (documented bias is
  /// negligible for bound << 2^64).
  std::size_t index(std::size_t bound) {
    return static_cast<std::size_t>(next_u64() % bound);
  }

  /// Fisher-Yates, descending.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = index(i);
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::uint64_t state_;
};

}  // namespace fairimb
