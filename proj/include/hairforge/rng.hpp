#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace hairforge {

// Seeded generator with distribution code written out here instead of using
// <random>'s distributions, whose algorithms are implementation-defined. The
// engine itself (mt19937_64) is fully specified, so sequences are identical
// across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform in [0,1) with 53 random bits.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Uniform in [lo,hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Uniform integer in [0,n), unbiased (rejection on the top of the range).
  std::uint64_t index(std::uint64_t n);

  bool coin() { return (engine_() >> 63) != 0; }

 private:
  std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x);

// Seed for one record: mixes the master seed, a string key and an index so any
// subset of a batch can be regenerated in isolation.
std::uint64_t derive_seed(std::uint64_t master, std::string_view key, std::uint64_t index);

}  // namespace hairforge
