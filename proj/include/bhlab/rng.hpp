#pragma once

#include <array>
#include <cstdint>

namespace bhlab {

// Philox 4x32-10: one 128-bit block from a 128-bit counter and 64-bit key.
inline std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                               std::array<std::uint32_t, 2> key) {
    constexpr std::uint32_t M0 = 0xD2511F53u, M1 = 0xCD9E8D57u;
    constexpr std::uint32_t W0 = 0x9E3779B9u, W1 = 0xBB67AE85u;
    for (int round = 0; round < 10; ++round) {
        const std::uint64_t p0 = std::uint64_t(M0) * ctr[0];
        const std::uint64_t p1 = std::uint64_t(M1) * ctr[2];
        ctr = {std::uint32_t(p1 >> 32) ^ ctr[1] ^ key[0], std::uint32_t(p1),
               std::uint32_t(p0 >> 32) ^ ctr[3] ^ key[1], std::uint32_t(p0)};
        key[0] += W0;
        key[1] += W1;
    }
    return ctr;
}

// Counter-based stream: the key carries the run seed, the high counter words
// carry the replicate index, the low words count blocks. Streams for
// different replicates never overlap and depend only on (seed, replicate),
// not on scheduling.
class CounterRng {
public:
    CounterRng(std::uint64_t seed, std::uint64_t replicate)
        : key_{std::uint32_t(seed), std::uint32_t(seed >> 32)},
          rep_{std::uint32_t(replicate), std::uint32_t(replicate >> 32)} {}

    std::uint64_t bits() {
        if (!half_) {
            block_ = philox4x32({std::uint32_t(index_), std::uint32_t(index_ >> 32), rep_[0], rep_[1]}, key_);
            ++index_;
            half_ = true;
            return (std::uint64_t(block_[0]) << 32) | block_[1];
        }
        half_ = false;
        return (std::uint64_t(block_[2]) << 32) | block_[3];
    }

    // uniform on [0, 1) with 53 random bits
    double uniform() { return double(bits() >> 11) * 0x1.0p-53; }

private:
    std::array<std::uint32_t, 2> key_;
    std::array<std::uint32_t, 2> rep_;
    std::array<std::uint32_t, 4> block_{};
    std::uint64_t index_ = 0;
    bool half_ = false;
};

} // namespace bhlab
