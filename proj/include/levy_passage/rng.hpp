#pragma once

// Counter-based random streams.
//
// Philox4x32-10 keyed by the 64-bit experiment seed. The 128-bit counter is
// split into a 64-bit block index and a 64-bit stream id, so replication r of
// an experiment always reads the same numbers no matter which thread runs it.

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>

namespace levy_passage {

namespace detail {

inline std::array<std::uint32_t, 4> philox_round(const std::array<std::uint32_t, 4>& ctr,
                                                 const std::array<std::uint32_t, 2>& key) {
  constexpr std::uint64_t kM0 = 0xD2511F53u;
  constexpr std::uint64_t kM1 = 0xCD9E8D57u;
  const std::uint64_t p0 = kM0 * ctr[0];
  const std::uint64_t p1 = kM1 * ctr[2];
  return {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0], static_cast<std::uint32_t>(p1),
          static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1], static_cast<std::uint32_t>(p0)};
}

}  // namespace detail

/// The Philox4x32 bijection with 10 rounds.
inline std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> ctr,
                                                  std::array<std::uint32_t, 2> key) {
  constexpr std::uint32_t kW0 = 0x9E3779B9u;
  constexpr std::uint32_t kW1 = 0xBB67AE85u;
  ctr = detail::philox_round(ctr, key);
  for (int i = 1; i < 10; ++i) {
    key[0] += kW0;
    key[1] += kW1;
    ctr = detail::philox_round(ctr, key);
  }
  return ctr;
}

/// Purposes let one replication own several independent substreams.
enum class StreamPurpose : std::uint64_t {
  Path = 0,
  Level = 1,       // randomised levels (Exp(mu) in the transform identity)
  Auxiliary = 2,   // oracle runs and helper estimators
};

/// One independent stream: (seed, stream id, purpose). Satisfies
/// UniformRandomBitGenerator with 32-bit output.
class Rng {
 public:
  using result_type = std::uint32_t;

  Rng(std::uint64_t seed, std::uint64_t stream, StreamPurpose purpose = StreamPurpose::Path)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)} {
    const std::uint64_t id = (stream & 0x00FFFFFFFFFFFFFFull) |
                             (static_cast<std::uint64_t>(purpose) << 56);
    stream_lo_ = static_cast<std::uint32_t>(id);
    stream_hi_ = static_cast<std::uint32_t>(id >> 32);
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    if (pos_ == 4) refill();
    return buffer_[pos_++];
  }

  std::uint64_t next_u64() {
    const std::uint64_t hi = (*this)();
    const std::uint64_t lo = (*this)();
    return (hi << 32) | lo;
  }

  /// Uniform on the open interval (0, 1).
  double uniform() { return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53; }

  double exponential(double rate) { return -std::log(uniform()) / rate; }

  /// Standard normal (Marsaglia polar method, spare value cached).
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double v1, v2, s;
    do {
      v1 = 2.0 * uniform() - 1.0;
      v2 = 2.0 * uniform() - 1.0;
      s = v1 * v1 + v2 * v2;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v2 * f;
    has_spare_ = true;
    return v1 * f;
  }

  std::uint64_t blocks_used() const { return block_; }

 private:
  void refill() {
    buffer_ = philox4x32_10({static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32),
                             stream_lo_, stream_hi_},
                            key_);
    ++block_;
    pos_ = 0;
  }

  std::array<std::uint32_t, 2> key_;
  std::uint32_t stream_lo_ = 0;
  std::uint32_t stream_hi_ = 0;
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  int pos_ = 4;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace levy_passage
