#pragma once

// Philox4x64-10 counter-based generator (Salmon et al., SC'11) with named
// substreams. A stream is keyed by the user seed; the counter carries
// (block, trial_index, purpose, 0), so any (seed, trial, purpose) triple
// reproduces the same sequence regardless of scheduling.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace rfrisk {

using Philox4x64Block = std::array<std::uint64_t, 4>;
using Philox4x64Key = std::array<std::uint64_t, 2>;

namespace detail {

inline void mulhilo64(std::uint64_t a, std::uint64_t b, std::uint64_t& hi, std::uint64_t& lo) {
    const unsigned __int128 p = static_cast<unsigned __int128>(a) * b;
    hi = static_cast<std::uint64_t>(p >> 64);
    lo = static_cast<std::uint64_t>(p);
}

}  // namespace detail

[[nodiscard]] inline Philox4x64Block philox4x64_10(Philox4x64Block ctr, Philox4x64Key key) {
    constexpr std::uint64_t m0 = 0xD2E7470EE14C6C93ULL;
    constexpr std::uint64_t m1 = 0xCA5A826395121157ULL;
    constexpr std::uint64_t w0 = 0x9E3779B97F4A7C15ULL;
    constexpr std::uint64_t w1 = 0xBB67AE8584CAA73BULL;
    for (int round = 0; round < 10; ++round) {
        std::uint64_t hi0, lo0, hi1, lo1;
        detail::mulhilo64(m0, ctr[0], hi0, lo0);
        detail::mulhilo64(m1, ctr[2], hi1, lo1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        key[0] += w0;
        key[1] += w1;
    }
    return ctr;
}

enum class StreamPurpose : std::uint64_t { theta = 1, x = 2, noise = 3, test = 4, w = 5 };

/// Sequential reader over one substream.
class PhiloxStream {
public:
    PhiloxStream(std::uint64_t seed, std::uint64_t trial_index, StreamPurpose purpose)
        : key_{seed, 0}, trial_(trial_index), purpose_(static_cast<std::uint64_t>(purpose)) {}

    [[nodiscard]] std::uint64_t next_u64() {
        if (pos_ == 4) {
            buf_ = philox4x64_10({block_++, trial_, purpose_, 0}, key_);
            pos_ = 0;
        }
        return buf_[pos_++];
    }

    /// Uniform on (0, 1): 53 random bits, offset by half an ulp so 0 is never returned.
    [[nodiscard]] double uniform() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Standard normal by Box-Muller; the second variate of each pair is cached.
    [[nodiscard]] double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double t = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(t);
        has_spare_ = true;
        return r * std::cos(t);
    }

private:
    Philox4x64Key key_;
    std::uint64_t trial_;
    std::uint64_t purpose_;
    std::uint64_t block_ = 0;
    Philox4x64Block buf_{};
    int pos_ = 4;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace rfrisk
