#pragma once

// Seeded random streams for the simulator.
//
// Every run owns independent substreams, each a std::mt19937_64 whose
// state is seeded from splitmix64(seed + stream_id * golden-gamma). The
// variates are produced by explicit inverse transforms instead of the
// <random> distributions, whose algorithms differ between standard
// libraries, so a seed yields the same event log on every platform.

#include <cmath>
#include <cstdint>
#include <random>

namespace aoi {

enum class StreamId : std::uint64_t { Arrivals = 1, Erasures = 2 };

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

class RandomStream {
 public:
  RandomStream(std::uint64_t seed, StreamId id) {
    std::uint64_t s = seed + static_cast<std::uint64_t>(id) * 0x9E3779B97F4A7C15ULL;
    std::seed_seq seq{static_cast<std::uint32_t>(splitmix64(s)), static_cast<std::uint32_t>(splitmix64(s)),
                      static_cast<std::uint32_t>(splitmix64(s)), static_cast<std::uint32_t>(splitmix64(s))};
    engine_.seed(seq);
  }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // exp(1) by inversion; log1p(-u) is finite because u < 1.
  double exponential() { return -std::log1p(-uniform()); }

  bool bernoulli(double p) { return uniform() < p; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace aoi
