#include "qbsde/philox.hpp"

#include <cmath>

namespace qbsde {
namespace {

constexpr std::uint32_t kPhiloxW32A = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW32B = 0xBB67AE85u;
constexpr std::uint32_t kPhiloxM4x32A = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM4x32B = 0xCD9E8D57u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
    const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(p >> 32);
    lo = static_cast<std::uint32_t>(p);
}

inline void round_once(std::array<std::uint32_t, 4>& ctr, const std::array<std::uint32_t, 2>& key) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kPhiloxM4x32A, ctr[0], hi0, lo0);
    mulhilo(kPhiloxM4x32B, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
}

}  // namespace

Philox4x32::Philox4x32(std::uint64_t key, std::uint64_t stream) : stream_(stream) {
    key_ = {static_cast<std::uint32_t>(key), static_cast<std::uint32_t>(key >> 32)};
}

void Philox4x32::seek(std::uint64_t block) {
    block_index_ = block;
    word_pos_ = 4;
    have_cached_normal_ = false;
}

void Philox4x32::refill() {
    std::array<std::uint32_t, 4> ctr = {
        static_cast<std::uint32_t>(block_index_),
        static_cast<std::uint32_t>(block_index_ >> 32),
        static_cast<std::uint32_t>(stream_),
        static_cast<std::uint32_t>(stream_ >> 32),
    };
    std::array<std::uint32_t, 2> key = key_;
    round_once(ctr, key);
    for (int r = 1; r < 10; ++r) {
        key[0] += kPhiloxW32A;
        key[1] += kPhiloxW32B;
        round_once(ctr, key);
    }
    block_ = ctr;
    ++block_index_;
    word_pos_ = 0;
}

std::uint32_t Philox4x32::next_u32() {
    if (word_pos_ >= 4) refill();
    return block_[word_pos_++];
}

double Philox4x32::uniform() {
    const std::uint64_t hi = next_u32();
    const std::uint64_t lo = next_u32();
    const std::uint64_t bits = (hi << 32) | lo;
    // (bits + 0.5) * 2^-64 lies strictly in (0,1), so log() below is safe.
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-64;
}

double Philox4x32::normal() {
    if (have_cached_normal_) {
        have_cached_normal_ = false;
        return cached_normal_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * M_PI * u2;
    cached_normal_ = r * std::sin(theta);
    have_cached_normal_ = true;
    return r * std::cos(theta);
}

}  // namespace qbsde
