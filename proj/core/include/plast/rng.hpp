#ifndef PLAST_RNG_HPP
#define PLAST_RNG_HPP

#include <cstdint>
#include <string_view>

namespace plast {

// Counter-based splitmix64 stream. Chosen over std::mt19937 so that the
// same seed produces the same draws on every platform/stdlib.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1).
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform in [lo, hi).
  double uniform(double lo, double hi) {
    return lo + (hi - lo) * next_double();
  }

  // Uniform integer in [0, n). Modulo bias is irrelevant at these sizes
  // (n <= a few million against a 64-bit stream).
  std::uint64_t next_below(std::uint64_t n) { return next_u64() % n; }

  bool coin() { return (next_u64() & 1ULL) != 0; }

 private:
  std::uint64_t state_;
};

// Derives an independent child seed from (root, label, index). Streams for
// different purposes never collide even when workers are added or removed.
std::uint64_t derive_seed(std::uint64_t root, std::string_view label,
                          std::uint64_t index = 0);

}  // namespace plast

#endif  // PLAST_RNG_HPP
