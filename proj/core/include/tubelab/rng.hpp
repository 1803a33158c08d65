#pragma once

#include <cstdint>
#include <random>

#include "tubelab/real.hpp"

namespace tubelab {

// Deterministic RNG wrapper.  All randomized perturbations in the library go
// through this type so that a fixed seed reproduces runs bit for bit; the
// uniform helpers are written against raw 64-bit draws rather than
// std::uniform_real_distribution, whose output is implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t next_u64() { return eng_(); }

  // Uniform in [0,1), 53 mantissa bits.
  real uniform01() {
    return static_cast<real>(next_u64() >> 11) * 0x1.0p-53L;
  }

  real uniform(real lo, real hi) { return lo + (hi - lo) * uniform01(); }

  // Uniform in [-1,1].
  real uniform_sym() { return uniform(-1.0L, 1.0L); }

  // Derive an independent stream; used to give parallel work items stable
  // per-item seeds regardless of scheduling.
  Rng fork(std::uint64_t salt) {
    std::uint64_t s = next_u64();
    // splitmix64 finalizer decorrelates consecutive forks.
    std::uint64_t z = s + 0x9e3779b97f4a7c15ULL * (salt + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return Rng(z ^ (z >> 31));
  }

 private:
  std::mt19937_64 eng_;
};

}  // namespace tubelab
