#pragma once

#include <array>
#include <cstdint>

namespace spdekit {

// Philox4x32-10 counter-based generator (Salmon et al., SC'11). Output is a
// pure function of (counter, key), so any stream element can be produced
// without generating its predecessors.
class Philox4x32 {
 public:
  using Counter = std::array<uint32_t, 4>;
  using Key = std::array<uint32_t, 2>;

  static Counter Generate(Counter ctr, Key key) {
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        key[0] += kWeyl0;
        key[1] += kWeyl1;
      }
      ctr = Round(ctr, key);
    }
    return ctr;
  }

 private:
  static constexpr uint32_t kMul0 = 0xD2511F53u;
  static constexpr uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr uint32_t kWeyl0 = 0x9E3779B9u;
  static constexpr uint32_t kWeyl1 = 0xBB67AE85u;

  static Counter Round(const Counter& c, const Key& k) {
    const uint64_t p0 = static_cast<uint64_t>(kMul0) * c[0];
    const uint64_t p1 = static_cast<uint64_t>(kMul1) * c[2];
    const uint32_t hi0 = static_cast<uint32_t>(p0 >> 32);
    const uint32_t lo0 = static_cast<uint32_t>(p0);
    const uint32_t hi1 = static_cast<uint32_t>(p1 >> 32);
    const uint32_t lo1 = static_cast<uint32_t>(p1);
    return {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
  }
};

// Two independent standard normals addressed by (seed, step, mode, sample).
// Two 53-bit uniforms feed one Box-Muller transform.
std::array<double, 2> KeyedNormalPair(uint64_t seed, uint32_t step,
                                      uint32_t mode, uint32_t sample);

// Uniform in (0, 1) from the same counter layout, with the last counter word
// set to 1 so it never coincides with a normal pair.
double KeyedUniform(uint64_t seed, uint32_t a, uint32_t b, uint32_t c);

}  // namespace spdekit
