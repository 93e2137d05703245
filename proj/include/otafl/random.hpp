#pragma once

#include <array>
#include <cstdint>
#include <string_view>

namespace otafl::rng {

// Seed for a named sub-stream. Every piece of experiment randomness
// (deployment, fading, noise, data, ...) hangs off one root seed through
// this map, so identical root seeds reproduce identical runs bit-for-bit.
std::uint64_t substream_seed(std::uint64_t root_seed, std::string_view name,
                             std::uint64_t index = 0);

// xoshiro256++ with splitmix64 seeding. Self-contained so draws are
// identical across compilers and standard libraries. Not thread-safe;
// use one stream per thread of execution.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed);

  static RandomStream derive(std::uint64_t root_seed, std::string_view name,
                             std::uint64_t index = 0) {
    return RandomStream(substream_seed(root_seed, name, index));
  }

  std::uint64_t next_u64();

  // uniform in [0, 1)
  double uniform();

  // standard normal, Marsaglia polar method
  double normal();

 private:
  std::array<std::uint64_t, 4> state_{};
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace otafl::rng
