#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

namespace inb {

/// Seeded generator used everywhere randomness is needed. Wraps
/// std::mt19937_64 and converts bits to numbers with fixed formulas, so
/// draws are identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Independent stream for (seed, stream id). Streams are seeded with
  /// splitmix64(seed ^ splitmix64(stream_id)); sweep workers and the
  /// training loop's init/shuffle/mask/split uses each take their own id.
  static Rng stream(std::uint64_t seed, std::uint64_t stream_id);

  std::uint64_t next() { return engine_(); }
  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, n). n == 1 returns 0 without consuming a draw.
  std::size_t below(std::size_t n);
  bool bernoulli(double p) { return uniform() < p; }
  /// Standard normal (Box-Muller, one value per call).
  double normal();

 private:
  std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x);

/// Fixed stream ids used by the training harness.
namespace streams {
inline constexpr std::uint64_t kInit = 1;
inline constexpr std::uint64_t kShuffle = 2;
inline constexpr std::uint64_t kMask = 3;
inline constexpr std::uint64_t kSplit = 4;
}  // namespace streams

}  // namespace inb
