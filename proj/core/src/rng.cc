#include "spdekit/rng.h"

#include <cmath>

namespace spdekit {

namespace {

Philox4x32::Key MakeKey(uint64_t seed) {
  return {static_cast<uint32_t>(seed), static_cast<uint32_t>(seed >> 32)};
}

// 53 random bits from two words, mapped to the open interval (0, 1).
double ToUnit(uint32_t hi, uint32_t lo) {
  const uint64_t bits = (static_cast<uint64_t>(hi) << 21) ^ (lo >> 11);
  const uint64_t mantissa = bits & ((1ull << 53) - 1);
  return (static_cast<double>(mantissa) + 0.5) / 9007199254740992.0;
}

}  // namespace

std::array<double, 2> KeyedNormalPair(uint64_t seed, uint32_t step,
                                      uint32_t mode, uint32_t sample) {
  const Philox4x32::Counter out =
      Philox4x32::Generate({step, mode, sample, 0u}, MakeKey(seed));
  const double u1 = ToUnit(out[0], out[1]);
  const double u2 = ToUnit(out[2], out[3]);
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double phi = 2.0 * M_PI * u2;
  return {r * std::cos(phi), r * std::sin(phi)};
}

double KeyedUniform(uint64_t seed, uint32_t a, uint32_t b, uint32_t c) {
  const Philox4x32::Counter out =
      Philox4x32::Generate({a, b, c, 1u}, MakeKey(seed));
  return ToUnit(out[0], out[1]);
}

}  // namespace spdekit
