#pragma once

#include <cstdint>
#include <random>

namespace nerfpoison {

// Seeded RNG with hand-rolled draw functions so streams stay stable across
// standard library implementations (std distributions are not portable).
class Rng {
 public:
  explicit Rng(uint64_t seed) : eng_(seed) {}

  uint64_t next() { return eng_(); }

  // Uniform in [0, 1) with 53 bits of mantissa.
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n). Modulo bias is irrelevant at desk-scale n.
  uint64_t uniform_int(uint64_t n) { return eng_() % n; }

 private:
  std::mt19937_64 eng_;
};

// Reproducible substream construction from a root seed (splitmix64 step).
inline Rng make_rng(uint64_t seed, uint64_t stream = 0) {
  uint64_t z = seed + stream * 0x9e3779b97f4a7c15ULL + 0x632be59bd9b4e019ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return Rng(z ^ (z >> 31));
}

}  // namespace nerfpoison
