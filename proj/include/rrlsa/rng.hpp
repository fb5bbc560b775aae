#pragma once

// Counter-based random numbers for reproducible parallel Monte-Carlo.
//
// Philox4x32-10 (Salmon et al., "Parallel random numbers: as easy as 1, 2, 3")
// maps a (key, counter) pair to 128 random bits. A trajectory owns one key,
// and its draws are a pure function of that key and the draw index, so the
// output never depends on which thread ran the trajectory or when.

#include <array>
#include <cstdint>
#include <initializer_list>

namespace rrlsa {

namespace detail {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

inline constexpr void mulhilo32(std::uint32_t a, std::uint32_t b, std::uint32_t& hi,
                                std::uint32_t& lo) noexcept {
    const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(p >> 32);
    lo = static_cast<std::uint32_t>(p);
}

}  // namespace detail

/// Fold an ordered list of integers into a single 64-bit stream key.
inline constexpr std::uint64_t stream_key(std::initializer_list<std::uint64_t> parts) noexcept {
    std::uint64_t h = 0x6A09E667F3BCC909ULL;
    for (auto p : parts) {
        h = detail::splitmix64(h ^ detail::splitmix64(p));
    }
    return h;
}

using PhiloxBlock = std::array<std::uint32_t, 4>;

/// One Philox4x32-10 evaluation.
inline constexpr PhiloxBlock philox4x32(PhiloxBlock ctr, std::uint64_t key) noexcept {
    constexpr std::uint32_t kMul0 = 0xD2511F53U;
    constexpr std::uint32_t kMul1 = 0xCD9E8D57U;
    constexpr std::uint32_t kWeyl0 = 0x9E3779B9U;
    constexpr std::uint32_t kWeyl1 = 0xBB67AE85U;
    std::uint32_t k0 = static_cast<std::uint32_t>(key);
    std::uint32_t k1 = static_cast<std::uint32_t>(key >> 32);
    for (int round = 0; round < 10; ++round) {
        std::uint32_t hi0 = 0, lo0 = 0, hi1 = 0, lo1 = 0;
        detail::mulhilo32(kMul0, ctr[0], hi0, lo0);
        detail::mulhilo32(kMul1, ctr[2], hi1, lo1);
        ctr = {hi1 ^ ctr[1] ^ k0, lo1, hi0 ^ ctr[3] ^ k1, lo0};
        k0 += kWeyl0;
        k1 += kWeyl1;
    }
    return ctr;
}

/// Sequential view over a Philox stream. Satisfies UniformRandomBitGenerator.
class CounterRng {
public:
    using result_type = std::uint64_t;

    explicit CounterRng(std::uint64_t key) noexcept : key_(key) {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return ~result_type{0}; }

    result_type operator()() noexcept {
        if (buffered_ == 0) {
            refill();
        }
        --buffered_;
        return buffer_[buffered_];
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() noexcept {
        return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
    }

    std::uint64_t key() const noexcept { return key_; }

    /// Number of 128-bit blocks consumed so far.
    std::uint64_t blocks_used() const noexcept { return counter_; }

private:
    void refill() noexcept {
        const PhiloxBlock out = philox4x32(
            {static_cast<std::uint32_t>(counter_), static_cast<std::uint32_t>(counter_ >> 32), 0U, 0U},
            key_);
        ++counter_;
        // Stored in reverse so that operator() pops buffer_[1] first.
        buffer_[1] = (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
        buffer_[0] = (static_cast<std::uint64_t>(out[2]) << 32) | out[3];
        buffered_ = 2;
    }

    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    std::array<std::uint64_t, 2> buffer_{};
    int buffered_ = 0;
};

}  // namespace rrlsa
