#pragma once

#include <array>
#include <cstdint>

namespace qbsde {

// Philox4x32-10 counter-based generator. Streams are addressed, not advanced:
// the same (key, counter) always yields the same block, so per-path substreams
// are reproducible under any evaluation order.
class Philox4x32 {
public:
    // key <- master seed, stream <- substream id (occupies the high counter word).
    Philox4x32(std::uint64_t key, std::uint64_t stream);

    std::uint32_t next_u32();

    // Strictly inside (0,1); consumes two 32-bit words.
    double uniform();

    // Standard normal via Box-Muller; generates pairs, caches the second.
    double normal();

    // Jump to the b-th 128-bit block of this stream (discards cached values).
    void seek(std::uint64_t block);

private:
    void refill();

    std::array<std::uint32_t, 2> key_;
    std::array<std::uint32_t, 4> block_;
    std::uint64_t stream_ = 0;
    std::uint64_t block_index_ = 0;
    int word_pos_ = 4;  // forces refill on first use
    double cached_normal_ = 0.0;
    bool have_cached_normal_ = false;
};

// Master seed plus the substream derivation rule. Substreams are identified by
// a (kind, index) pair packed into the Philox counter, so distinct purposes
// (path simulation, auxiliary sampling, randomized stopping) never collide.
struct SeedSpec {
    std::uint64_t master_seed = 0;

    static constexpr std::uint64_t kPaths = 0;
    static constexpr std::uint64_t kSampling = 1;
    static constexpr std::uint64_t kStopping = 2;

    Philox4x32 stream(std::uint64_t kind, std::uint64_t index) const {
        return Philox4x32(master_seed, (kind << 48) | index);
    }

    bool operator==(const SeedSpec&) const = default;
};

}  // namespace qbsde
