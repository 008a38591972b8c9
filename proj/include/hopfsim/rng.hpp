#pragma once
// Counter-based random stream: every draw is a pure function of
// (master_seed, stream_id, counter), so any worker can evaluate any trial
// without shared state and replay is exact across platforms.
//
//   word(seed, stream, counter) = fin(fin(seed ^ GOLDEN*(stream+1)) + GOLDEN*counter)
//
// fin() is the SplitMix64 output finalizer; GOLDEN is the 64-bit golden-ratio
// increment. All arithmetic is wrapping uint64, so results are identical on
// every conforming platform. Frozen outputs live in the unit tests.

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace hopfsim {

namespace detail {

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

constexpr std::uint64_t splitmix_fin(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace detail

constexpr std::uint64_t rng_word(std::uint64_t master_seed, std::uint32_t stream_id,
                                 std::uint64_t counter) {
  const std::uint64_t stream_key =
      detail::splitmix_fin(master_seed ^ (detail::kGolden * (std::uint64_t{stream_id} + 1)));
  return detail::splitmix_fin(stream_key + detail::kGolden * counter);
}

// One logical stream of a master seed. Streams in use:
//   0: shared orientation source, 1: station A settings, 2: station B settings,
//   3: station A time jitter, 4: station B time jitter.
struct RngStream {
  std::uint64_t master_seed = 0;
  std::uint32_t stream_id = 0;

  std::uint64_t word(std::uint64_t counter) const {
    return rng_word(master_seed, stream_id, counter);
  }

  // Top bit decides the sign: bit set -> +1, clear -> -1.
  int sign(std::uint64_t counter) const {
    return (word(counter) >> 63) ? +1 : -1;
  }

  // Uniform in [0,1) from the top 53 bits.
  double u01(std::uint64_t counter) const {
    return static_cast<double>(word(counter) >> 11) * 0x1.0p-53;
  }

  // Uniform pick from n options (documented modulo reduction; the bias is
  // below 2^-50 for any realistic option count and is the same everywhere).
  std::uint64_t pick(std::uint64_t counter, std::uint64_t n) const {
    if (n == 0) throw std::domain_error("RngStream::pick: empty option set");
    return word(counter) % n;
  }

  // Symmetric integer jitter in [-magnitude, +magnitude] nanoseconds.
  std::int64_t jitter(std::uint64_t counter, std::int64_t magnitude) const {
    if (magnitude < 0) throw std::domain_error("RngStream::jitter: negative magnitude");
    if (magnitude == 0) return 0;
    const std::uint64_t span = 2 * static_cast<std::uint64_t>(magnitude) + 1;
    return static_cast<std::int64_t>(word(counter) % span) - magnitude;
  }
};

inline constexpr std::uint32_t kStreamSource = 0;
inline constexpr std::uint32_t kStreamSettingsA = 1;
inline constexpr std::uint32_t kStreamSettingsB = 2;
inline constexpr std::uint32_t kStreamJitterA = 3;
inline constexpr std::uint32_t kStreamJitterB = 4;

}  // namespace hopfsim
