#pragma once

#include <array>
#include <cstdint>

namespace bud {

// Philox4x32-10 counter-based generator (Salmon et al., SC'11 constants).
// A draw is one keyed bijection of (counter, stream): identical results for
// any thread schedule, which is what makes replicate-parallel Monte Carlo
// reproducible without pre-allocating stream state.
namespace philox {

inline std::array<std::uint32_t, 4> block(std::array<std::uint32_t, 4> ctr,
                                          std::array<std::uint32_t, 2> key) {
    constexpr std::uint32_t M0 = 0xD2511F53u, M1 = 0xCD9E8D57u;
    constexpr std::uint32_t W0 = 0x9E3779B9u, W1 = 0xBB67AE85u;
    for (int round = 0; round < 10; ++round) {
        const std::uint64_t p0 = static_cast<std::uint64_t>(M0) * ctr[0];
        const std::uint64_t p1 = static_cast<std::uint64_t>(M1) * ctr[2];
        ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0],
               static_cast<std::uint32_t>(p1),
               static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1],
               static_cast<std::uint32_t>(p0)};
        key[0] += W0;
        key[1] += W1;
    }
    return ctr;
}

}  // namespace philox

// One generator instance = one (seed, stream) pair; draws advance a private
// 64-bit counter. Streams are cheap values: copy freely, never share one
// instance across threads.
class RngStream {
   public:
    RngStream(std::uint64_t seed, std::uint64_t stream) : seed_(seed), stream_(stream) {}

    std::uint64_t next_u64() {
        const std::uint64_t c = counter_++;
        const auto out = philox::block(
            {static_cast<std::uint32_t>(c), static_cast<std::uint32_t>(c >> 32),
             static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32)},
            {static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32)});
        return (static_cast<std::uint64_t>(out[1]) << 32) | out[0];
    }

    // Uniform draw strictly inside (0, 1); safe to feed inverse CDFs.
    double uniform() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream() const { return stream_; }
    std::uint64_t draws() const { return counter_; }

   private:
    std::uint64_t seed_;
    std::uint64_t stream_;
    std::uint64_t counter_ = 0;
};

}  // namespace bud
