#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace doaloc {

/// SplitMix64 finaliser. Used to derive independent child seeds.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Folds a list of integers into a seed: h = splitmix64(h ^ v) for each v.
inline std::uint64_t derive_seed(std::uint64_t base,
                                 std::initializer_list<std::uint64_t> parts) {
  std::uint64_t h = splitmix64(base);
  for (std::uint64_t v : parts) h = splitmix64(h ^ v);
  return h;
}

/// Reproducible random stream.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the C++
/// standard. Distributions are implemented here rather than taken from
/// <random> because the standard leaves their algorithms unspecified:
///   uniform() = (next() >> 11) * 2^-53, in [0, 1)
///   normal()  = sqrt(-2 ln(1 - u1)) * cos(2 pi u2), one Box-Muller draw per
///               call, consuming two uniforms.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal();

 private:
  std::mt19937_64 engine_;
};

}  // namespace doaloc
