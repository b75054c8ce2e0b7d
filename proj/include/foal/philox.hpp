#pragma once

// Philox4x32-10 counter-based generator (Salmon et al., SC'11) and the
// normal-variate mapping used to build frozen projection matrices.
//
// Projection stream "philox4x32-10/box-muller/v1":
//   key     = (seed & 0xffffffff, seed >> 32)
//   counter = (p & 0xffffffff, p >> 32, 0, 0) for pair index p = 0, 1, ...
//   u1      = ((out0 >> 5) * 2^26 + (out1 >> 6) + 0.5) * 2^-53   in (0, 1)
//   u2      = ((out2 >> 5) * 2^26 + (out3 >> 6) + 0.5) * 2^-53   in (0, 1)
//   z0      = sqrt(-2 ln u1) cos(2 pi u2),  z1 = sqrt(-2 ln u1) sin(2 pi u2)
// Variate 2p is z0 and 2p+1 is z1. Matrix entry (row r, col c) of an
// E x D projection takes variate r*D + c.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace foal {

class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static constexpr int kRounds = 10;

  static constexpr Counter block(Counter ctr, Key key) noexcept {
    for (int r = 0; r < kRounds; ++r) {
      if (r > 0) {
        key[0] += kWeyl0;
        key[1] += kWeyl1;
      }
      ctr = round(ctr, key);
    }
    return ctr;
  }

 private:
  static constexpr std::uint32_t kMul0 = 0xD2511F53u;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

  static constexpr Counter round(const Counter& c, const Key& k) noexcept {
    const std::uint64_t p0 = std::uint64_t{kMul0} * c[0];
    const std::uint64_t p1 = std::uint64_t{kMul1} * c[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const auto lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const auto lo1 = static_cast<std::uint32_t>(p1);
    return {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
  }
};

/// Seed-keyed standard normal stream addressable by index.
class NormalStream {
 public:
  explicit NormalStream(std::uint64_t seed) noexcept
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)} {}

  /// Returns variates 2p and 2p+1.
  std::array<double, 2> pair(std::uint64_t p) const noexcept {
    const auto out = Philox4x32::block(
        {static_cast<std::uint32_t>(p), static_cast<std::uint32_t>(p >> 32), 0u, 0u}, key_);
    const double u1 = unit(out[0], out[1]);
    const double u2 = unit(out[2], out[3]);
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    return {radius * std::cos(theta), radius * std::sin(theta)};
  }

  double at(std::uint64_t index) const noexcept { return pair(index / 2)[index % 2]; }

 private:
  static double unit(std::uint32_t a, std::uint32_t b) noexcept {
    const std::uint64_t bits = (std::uint64_t{a >> 5} << 26) | (b >> 6);
    return (static_cast<double>(bits) + 0.5) * 0x1p-53;
  }

  Philox4x32::Key key_;
};

}  // namespace foal
