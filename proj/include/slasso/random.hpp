#pragma once

// Counter-based random numbers: Philox4x32-10 (Salmon et al., "Parallel
// random numbers: as easy as 1, 2, 3", SC'11).
//
// A generator is addressed by (seed, stream). The 64-bit seed is the Philox
// key, the stream occupies the high half of the 128-bit counter and the
// block index the low half, so any (seed, stream) pair is an independent
// sequence and every value can be recomputed from its position alone.
// Integer arithmetic only up to the uniform; normals come from the polar
// Box-Muller transform.

#include <array>
#include <cmath>
#include <cstdint>

namespace slasso {

class Philox4x32 {
 public:
  using Block = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static constexpr int kRounds = 10;

  /// The raw bijection: encrypt `ctr` under `key`.
  static constexpr Block encrypt(Block ctr, Key key) noexcept {
    for (int r = 0; r < kRounds; ++r) {
      if (r > 0) {
        key[0] += kW0;
        key[1] += kW1;
      }
      const std::uint64_t p0 = std::uint64_t{kM0} * ctr[0];
      const std::uint64_t p1 = std::uint64_t{kM1} * ctr[2];
      const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
      const auto lo0 = static_cast<std::uint32_t>(p0);
      const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
      const auto lo1 = static_cast<std::uint32_t>(p1);
      ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    }
    return ctr;
  }

 private:
  static constexpr std::uint32_t kM0 = 0xD2511F53;
  static constexpr std::uint32_t kM1 = 0xCD9E8D57;
  static constexpr std::uint32_t kW0 = 0x9E3779B9;
  static constexpr std::uint32_t kW1 = 0xBB67AE85;
};

/// Sequential view of one Philox stream: 64-bit words, uniforms in [0,1),
/// standard normals.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream) noexcept
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        stream_(stream) {}

  std::uint64_t next_u64() noexcept {
    if (lane_ == 2) refill();
    return buffer_[lane_++];
  }

  /// 53-bit uniform in [0, 1).
  double uniform() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Standard normal by the Marsaglia polar method; the second variate of
  /// each accepted pair is cached.
  double normal() noexcept {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    has_spare_ = true;
    return u * f;
  }

  std::uint64_t blocks_consumed() const noexcept { return block_; }

 private:
  void refill() noexcept {
    const Philox4x32::Block ctr{static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32),
                                static_cast<std::uint32_t>(stream_),
                                static_cast<std::uint32_t>(stream_ >> 32)};
    const auto out = Philox4x32::encrypt(ctr, key_);
    buffer_[0] = (std::uint64_t{out[1]} << 32) | out[0];
    buffer_[1] = (std::uint64_t{out[3]} << 32) | out[2];
    ++block_;
    lane_ = 0;
  }

  Philox4x32::Key key_;
  std::uint64_t stream_;
  std::uint64_t block_ = 0;
  std::array<std::uint64_t, 2> buffer_{};
  int lane_ = 2;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// Standard normals for (seed, stream).
class NormalStream {
 public:
  NormalStream(std::uint64_t seed, std::uint64_t stream) noexcept : rng_(seed, stream) {}
  double operator()() noexcept { return rng_.normal(); }

 private:
  CounterRng rng_;
};

inline NormalStream normal_stream(std::uint64_t seed, std::uint64_t stream) noexcept {
  return NormalStream(seed, stream);
}

}  // namespace slasso
