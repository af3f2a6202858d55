#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace cwhyst::rng {

// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
// A stream is identified by a 64-bit key; successive blocks are obtained by
// incrementing a 128-bit counter, so any (key, counter) pair can be evaluated
// independently of all others. Replicas of a Monte Carlo run get their own
// stream derived from (master seed, replica index), which makes every replica
// reproducible regardless of scheduling.

namespace detail {

inline constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
inline constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
inline constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
inline constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
    const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(p >> 32);
    lo = static_cast<std::uint32_t>(p);
}

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

}  // namespace detail

inline std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                               std::array<std::uint32_t, 2> key) {
    using namespace detail;
    for (int round = 0; round < 10; ++round) {
        std::uint32_t hi0, lo0, hi1, lo1;
        mulhilo(kPhiloxM0, ctr[0], hi0, lo0);
        mulhilo(kPhiloxM1, ctr[2], hi1, lo1);
        const std::array<std::uint32_t, 4> next = {
            hi1 ^ ctr[1] ^ key[0], lo1,
            hi0 ^ ctr[3] ^ key[1], lo0};
        ctr = next;
        key[0] += kPhiloxW0;
        key[1] += kPhiloxW1;
    }
    return ctr;
}

class Stream {
public:
    Stream() : Stream(0, 0) {}

    Stream(std::uint64_t master_seed, std::uint64_t stream_index) {
        std::uint64_t s = master_seed;
        (void)detail::splitmix64(s);
        s ^= 0x6A09E667F3BCC909ull + stream_index * 0x9E3779B97F4A7C15ull;
        const std::uint64_t k = detail::splitmix64(s);
        key_ = {static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(k >> 32)};
        ctr_ = {0, 0,
                static_cast<std::uint32_t>(stream_index),
                static_cast<std::uint32_t>(stream_index >> 32)};
        pos_ = 4;
    }

    std::uint32_t next_u32() {
        if (pos_ >= 4) refill();
        return block_[pos_++];
    }

    std::uint64_t next_u64() {
        const std::uint64_t lo = next_u32();
        const std::uint64_t hi = next_u32();
        return (hi << 32) | lo;
    }

    // Uniform on [0,1) with 53-bit resolution.
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Uniform on (0,1]; safe argument for log().
    double uniform_pos() {
        return 1.0 - uniform();
    }

    double uniform(double lo, double hi) {
        return lo + (hi - lo) * uniform();
    }

    double exponential(double rate) {
        return -std::log(uniform_pos()) / rate;
    }

    double normal() {
        if (have_cached_) {
            have_cached_ = false;
            return cached_;
        }
        const double u = uniform_pos();
        const double v = uniform();
        const double r = std::sqrt(-2.0 * std::log(u));
        const double a = 6.283185307179586476925286766559 * v;
        cached_ = r * std::sin(a);
        have_cached_ = true;
        return r * std::cos(a);
    }

private:
    void refill() {
        block_ = philox4x32(ctr_, key_);
        pos_ = 0;
        if (++ctr_[0] == 0 && ++ctr_[1] == 0) ++ctr_[2];
    }

    std::array<std::uint32_t, 4> ctr_{};
    std::array<std::uint32_t, 2> key_{};
    std::array<std::uint32_t, 4> block_{};
    int pos_ = 4;
    double cached_ = 0.0;
    bool have_cached_ = false;
};

}  // namespace cwhyst::rng
