#pragma once

#include <cstdint>
#include <random>

namespace specshift {

/// Deterministic uniform generator. Wraps std::mt19937_64 (whose output
/// sequence is pinned by the standard) and derives doubles with the 53-bit
/// shift so draws are reproducible independent of the standard library's
/// distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  /// Uniform draw in [0, 1).
  double uniform01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  /// Uniform draw in [a, b).
  double uniform(double a, double b) { return a + (b - a) * uniform01(); }

  std::uint64_t next_u64() { return gen_(); }

 private:
  std::mt19937_64 gen_;
};

/// Stateless child-seed derivation (splitmix64 mixing of the key triple).
/// Cells of a sweep own independent streams keyed by (master, n, trial),
/// so parallel scheduling cannot change any cell's draws.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t n,
                                 std::uint64_t trial) {
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  std::uint64_t h = mix(master);
  h = mix(h ^ mix(n + 0x517cc1b727220a95ULL));
  h = mix(h ^ mix(trial + 0x6a09e667f3bcc909ULL));
  return h;
}

}  // namespace specshift
