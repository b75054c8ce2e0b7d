#include <doctest.h>

#include <cmath>

#include "foal/philox.hpp"

using foal::NormalStream;
using foal::Philox4x32;

// Known-answer vectors published with the Random123 reference implementation.
TEST_CASE("philox4x32-10 known answers") {
  CHECK(Philox4x32::block({0, 0, 0, 0}, {0, 0}) ==
        Philox4x32::Counter{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
  CHECK(Philox4x32::block({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu}) ==
        Philox4x32::Counter{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
  CHECK(Philox4x32::block({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u}) ==
        Philox4x32::Counter{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("normal stream is addressable and seed keyed") {
  const NormalStream a(7), b(7), c(8);
  for (std::uint64_t i = 0; i < 64; ++i) {
    CHECK(a.at(i) == b.at(i));
    CHECK(std::isfinite(a.at(i)));
  }
  int differ = 0;
  for (std::uint64_t i = 0; i < 64; ++i) differ += a.at(i) != c.at(i);
  CHECK(differ == 64);
  const auto p = a.pair(5);
  CHECK(a.at(10) == p[0]);
  CHECK(a.at(11) == p[1]);
}
