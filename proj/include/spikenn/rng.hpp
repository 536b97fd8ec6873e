#pragma once

#include <cstdint>
#include <numeric>
#include <vector>

namespace spikenn {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Counter-based generator: the value at index i is a pure function of
// (seed, stream, i), so any draw can be reproduced without replaying the
// sequence and independent streams never interleave.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream)
      : key_(splitmix64(seed ^ splitmix64(stream ^ 0x6a09e667f3bcc909ULL))) {}

  std::uint64_t bits(std::uint64_t i) const { return splitmix64(key_ + i); }

  // Uniform double in [0, 1).
  double uniform(std::uint64_t i) const {
    return static_cast<double>(bits(i) >> 11) * 0x1.0p-53;
  }

  // Uniform double in [lo, hi).
  double uniform(std::uint64_t i, double lo, double hi) const {
    return lo + (hi - lo) * uniform(i);
  }

  // Uniform integer in [0, n). Modulo bias is < n / 2^64, far below anything
  // observable here.
  std::uint64_t below(std::uint64_t i, std::uint64_t n) const {
    return bits(i) % n;
  }

 private:
  std::uint64_t key_;
};

// Fisher-Yates permutation of {0..n-1} drawn from its own stream.
inline std::vector<std::size_t> random_permutation(std::uint64_t seed,
                                                   std::uint64_t stream,
                                                   std::size_t n) {
  CounterRng rng(seed, stream);
  std::vector<std::size_t> p(n);
  std::iota(p.begin(), p.end(), std::size_t{0});
  for (std::size_t i = n; i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(rng.below(n - i, i));
    std::swap(p[i - 1], p[j]);
  }
  return p;
}

}  // namespace spikenn
