// Seedable per-agent random streams.
#pragma once

#include <cstdint>
#include <random>

namespace petc {

/// SplitMix64 finaliser, used to derive independent stream seeds.
std::uint64_t splitmix64(std::uint64_t& state);

enum class Stream : std::uint64_t { sampling = 1, delay = 2, initial = 3 };

/// Seed of the (agent, stream) generator; adding agents leaves others intact.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t agent, Stream stream);

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}
  Rng(std::uint64_t master, std::uint64_t agent, Stream stream)
      : eng_(derive_seed(master, agent, stream)) {}

  /// Uniform on [0, 1) from the top 53 bits; identical on every platform.
  double uniform01() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

 private:
  std::mt19937_64 eng_;
};

}  // namespace petc
