#pragma once

#include <array>
#include <cstdint>
#include <random>

namespace nsa {

// Seedable generator used everywhere randomness is needed.
//
// The engine is std::mt19937_64 seeded with a single 64-bit value. Conversions
// to real numbers are done here rather than through <random> distributions so
// that streams are identical across standard libraries:
//   uniform()        = (next() >> 11) * 2^-53            in [0, 1)
//   uniform_left()   = 1 - uniform()                     in (0, 1]
//   normal_pair()    = Box-Muller on (uniform_left(), uniform())
//   below(n)         = Lemire multiply-shift with rejection
//
// Independent substreams are obtained with derive_seed(master, index).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform_left() { return 1.0 - uniform(); }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  std::array<double, 2> normal_pair();

  double normal() { return normal_pair()[0]; }

  // Uniform integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n);

 private:
  std::mt19937_64 engine_;
};

// splitmix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

// Seed of substream `index` under `master`.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

}  // namespace nsa
