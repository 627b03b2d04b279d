#pragma once

#include <cstdint>
#include <random>

namespace dte {

// Reproducible randomness. Every consumer draws from its own stream, seeded
// by SplitMix64(seed ^ stream-salt); each stream is a std::mt19937_64, whose
// output sequence is fixed by the C++ standard. Integer and real variates are
// produced here instead of via <random> distributions, which are
// implementation-defined.
enum class StreamId : std::uint64_t {
  initial_plan = 1,
  agent_pick = 2,
  action_sample = 3,
  sampling = 4,  // test and verification sampling
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, StreamId stream) {
  return splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(stream)));
}

class RandomStream {
 public:
  RandomStream(std::uint64_t seed, StreamId stream) : engine_(derive_seed(seed, stream)) {}

  std::uint64_t next() { return engine_(); }

  // Uniform on [0, n), unbiased (Lemire's multiply-and-reject).
  std::uint64_t uniform_index(std::uint64_t n) {
    unsigned __int128 m = static_cast<unsigned __int128>(engine_()) * n;
    auto low = static_cast<std::uint64_t>(m);
    if (low < n) {
      const std::uint64_t floor = (0 - n) % n;
      while (low < floor) {
        m = static_cast<unsigned __int128>(engine_()) * n;
        low = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  // Uniform on [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace dte
