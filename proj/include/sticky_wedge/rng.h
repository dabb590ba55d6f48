#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace sticky_wedge {

// Philox4x32-10 block function (Salmon et al. counter-based generator).
using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

inline PhiloxCounter Philox4x32(PhiloxCounter ctr, PhiloxKey key) {
  constexpr std::uint32_t kM0 = 0xD2511F53u;
  constexpr std::uint32_t kM1 = 0xCD9E8D57u;
  constexpr std::uint32_t kW0 = 0x9E3779B9u;
  constexpr std::uint32_t kW1 = 0xBB67AE85u;
  for (int round = 0; round < 10; ++round) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(kM0) * ctr[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(kM1) * ctr[2];
    ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0],
           static_cast<std::uint32_t>(p1),
           static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1],
           static_cast<std::uint32_t>(p0)};
    key[0] += kW0;
    key[1] += kW1;
  }
  return ctr;
}

// Stream of random numbers identified by (seed, replica, substream).
//
// The 64-bit key is seed ^ replica, so replica r of a run with seed s draws
// from the stream keyed s ^ r. The substream id occupies the upper half of
// the counter and separates independent uses within one replica (e.g. SRBM
// noise vs. sum-process noise). Blocks are consumed in counter order, so a
// stream is reproducible regardless of which thread runs it.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t replica,
             std::uint64_t substream = 0)
      : key_{static_cast<std::uint32_t>(seed ^ replica),
             static_cast<std::uint32_t>((seed ^ replica) >> 32)},
        substream_(substream) {}

  std::uint32_t NextU32() {
    if (pos_ == 4) Refill();
    return block_[pos_++];
  }

  std::uint64_t NextU64() {
    const std::uint64_t hi = NextU32();
    return (hi << 32) | NextU32();
  }

  // Uniform on the open interval (0, 1) with 53 random bits.
  double Uniform() {
    const std::uint64_t bits = NextU64() >> 11;
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
  }

  double Exponential(double rate) { return -std::log(Uniform()) / rate; }

  // Standard normal via Box-Muller; the second variate is cached.
  double Normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double r = std::sqrt(-2.0 * std::log(Uniform()));
    const double phi = 2.0 * std::numbers::pi * Uniform();
    spare_ = r * std::sin(phi);
    has_spare_ = true;
    return r * std::cos(phi);
  }

  std::uint64_t blocks_used() const { return block_index_; }

 private:
  void Refill() {
    const PhiloxCounter ctr = {
        static_cast<std::uint32_t>(block_index_),
        static_cast<std::uint32_t>(block_index_ >> 32),
        static_cast<std::uint32_t>(substream_),
        static_cast<std::uint32_t>(substream_ >> 32)};
    block_ = Philox4x32(ctr, key_);
    ++block_index_;
    pos_ = 0;
  }

  PhiloxKey key_;
  std::uint64_t substream_;
  std::uint64_t block_index_ = 0;
  PhiloxCounter block_{};
  int pos_ = 4;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Fixed substream ids.
inline constexpr std::uint64_t kStreamLattice = 1;
inline constexpr std::uint64_t kStreamRenewal = 2;
inline constexpr std::uint64_t kStreamSrbm = 3;
inline constexpr std::uint64_t kStreamSum = 4;
inline constexpr std::uint64_t kStreamCalibration = 5;
inline constexpr std::uint64_t kStreamHarness = 6;

}  // namespace sticky_wedge
