#pragma once

#include <cstdint>
#include <random>

namespace qesgd {

// Seeded uniform source. The (seed, stream) pair fully determines the
// sequence; std::mt19937_64 is specified bit-exactly by the standard and all
// derived draws below are computed here rather than through the
// implementation-defined std:: distributions.
class RandomSource {
 public:
  RandomSource(std::uint64_t seed, std::uint64_t stream);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform();

  // Uniform integer on [0, n). n must be positive.
  std::uint64_t uniform_index(std::uint64_t n);

  // Standard normal via Box-Muller (one value per call, spare discarded).
  double normal();

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::mt19937_64 engine_;
};

// Stream ids used by the optimizers and the simulator.
inline constexpr std::uint64_t kSampleStream = 0;
inline constexpr std::uint64_t kQuantStream = 1;
inline constexpr std::uint64_t kDataStream = 0x5eedda7aULL;

}  // namespace qesgd
