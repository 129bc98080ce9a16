#pragma once

#include "smoothclt/common.hpp"
#include "smoothclt/special.hpp"

#include <cstdint>

namespace smoothclt {

/// Counter-based generator: draw number c of stream s under seed k is a pure
/// function of (k, s, c), so any split of the work across substreams
/// reproduces the same numbers.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter = 0)
      : key_(mix(seed ^ mix(stream + 0x632be59bd9b4e019ULL))), counter_(counter) {}

  std::uint64_t counter() const { return counter_; }

  std::uint64_t next_u64() { return mix(key_ + 0x9e3779b97f4a7c15ULL * ++counter_); }

  /// Uniform on the open interval (0, 1), 53-bit resolution.
  double uniform() { return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53; }

  double normal() { return normal_quantile(uniform()); }

 private:
  // splitmix64 finalizer
  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t key_;
  std::uint64_t counter_;
};

}  // namespace smoothclt
