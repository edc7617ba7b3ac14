#pragma once

#include <cstdint>
#include <random>

namespace rmeta {

// Deterministic random stream. All sampling in the library goes through this
// wrapper so that results do not depend on the standard library's
// distribution implementations: uniform doubles are produced from raw 64-bit
// draws with a fixed mapping.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1) with 53-bit resolution.
  double uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Derives an independent child stream. Streams with distinct ids are
  // decorrelated via splitmix64 on (seed, stream id).
  static Rng child(std::uint64_t seed, std::uint64_t stream) {
    return Rng(mix(mix(seed) ^ mix(stream ^ 0x9e3779b97f4a7c15ull)));
  }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  std::mt19937_64 engine_;
};

}  // namespace rmeta
