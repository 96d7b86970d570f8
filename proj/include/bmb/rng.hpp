#pragma once

// Counter-based RNG (Philox4x32-10) and a Box-Muller normal stream on top.
//
// Streams are addressed as (seed, stream): the 64-bit stream id occupies the
// high counter lanes, the block index the low ones, and the key is the master
// seed. Distinct (seed, stream) pairs therefore enumerate disjoint counter
// ranges of the same keyed bijection, which is what makes every replication,
// bootstrap resample and noise draw reproducible independently of scheduling
// or thread count.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace bmb {

class Philox {
  public:
    Philox(std::uint64_t seed, std::uint64_t stream)
        : k0_(static_cast<std::uint32_t>(seed)),
          k1_(static_cast<std::uint32_t>(seed >> 32)),
          c2_(static_cast<std::uint32_t>(stream)),
          c3_(static_cast<std::uint32_t>(stream >> 32)) {}

    std::array<std::uint32_t, 4> next_block() {
        std::array<std::uint32_t, 4> x = {c0_, c1_, c2_, c3_};
        std::uint32_t k0 = k0_, k1 = k1_;
        for (int round = 0; round < 10; ++round) {
            const std::uint64_t p0 = 0xD2511F53ull * x[0];
            const std::uint64_t p1 = 0xCD9E8D57ull * x[2];
            const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
            const auto lo0 = static_cast<std::uint32_t>(p0);
            const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
            const auto lo1 = static_cast<std::uint32_t>(p1);
            x = {hi1 ^ x[1] ^ k0, lo1, hi0 ^ x[3] ^ k1, lo0};
            k0 += 0x9E3779B9u;
            k1 += 0xBB67AE85u;
        }
        if (++c0_ == 0) ++c1_;  // 64-bit block counter in the low lanes
        return x;
    }

  private:
    std::uint32_t k0_, k1_;
    std::uint32_t c0_ = 0, c1_ = 0, c2_, c3_;
};

class RandomStream {
  public:
    RandomStream(std::uint64_t seed, std::uint64_t stream) : gen_(seed, stream) {}

    std::uint64_t next_u64() {
        if (have_u64_) {
            have_u64_ = false;
            return spare_u64_;
        }
        const auto b = gen_.next_block();
        spare_u64_ = (static_cast<std::uint64_t>(b[2]) << 32) | b[3];
        have_u64_ = true;
        return (static_cast<std::uint64_t>(b[0]) << 32) | b[1];
    }

    // Uniform on [0,1), 53-bit resolution.
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform integer in [0, m) by rejection-free 128-bit multiply-shift;
    // bias < 2^-64, irrelevant for m ~ 1e6 resample index draws.
    std::uint64_t next_below(std::uint64_t m) {
        using u128 = unsigned __int128;
        return static_cast<std::uint64_t>((static_cast<u128>(next_u64()) * m) >> 64);
    }

    double next_normal() {
        if (have_normal_) {
            have_normal_ = false;
            return spare_normal_;
        }
        const auto b = gen_.next_block();
        const std::uint64_t u = (static_cast<std::uint64_t>(b[0]) << 32) | b[1];
        const std::uint64_t v = (static_cast<std::uint64_t>(b[2]) << 32) | b[3];
        const double u1 = (static_cast<double>(u >> 11) + 1.0) * 0x1.0p-53;  // (0,1]
        const double u2 = static_cast<double>(v >> 11) * 0x1.0p-53;          // [0,1)
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double t = 2.0 * std::numbers::pi * u2;
        spare_normal_ = r * std::sin(t);
        have_normal_ = true;
        return r * std::cos(t);
    }

  private:
    Philox gen_;
    bool have_u64_ = false, have_normal_ = false;
    std::uint64_t spare_u64_ = 0;
    double spare_normal_ = 0.0;
};

// Stream-id tags keep the purposes of substreams disjoint.
namespace stream_tag {
inline constexpr std::uint64_t path = 0x0100000000000000ull;
inline constexpr std::uint64_t bootstrap = 0x0200000000000000ull;
inline constexpr std::uint64_t synthetic = 0x0300000000000000ull;
}  // namespace stream_tag

}  // namespace bmb
