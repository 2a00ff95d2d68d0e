#pragma once

#include <cmath>
#include <cstdint>

namespace eegr {

// Counter-based generator (SplitMix64 finalizer over an affine counter).
// Output i of stream s depends only on (seed, s, i), so streams can be
// evaluated in any order on any platform with identical results. Floating
// point derivation avoids std::uniform_real_distribution and friends,
// whose output is implementation-defined.
class CounterRng {
public:
    explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0)
        : base_(derive_stream(seed, stream)) {}

    std::uint64_t next_u64() { return mix(base_ + (++counter_) * kGamma); }

    // Uniform in [0, 1) with 53 random bits.
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    // Standard normal via Box-Muller (deterministic, no cached spare).
    double gaussian() {
        double u1 = next_double();
        double u2 = next_double();
        while (u1 <= 0.0) u1 = next_double();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

    std::uint64_t uniform_index(std::uint64_t n) { return n ? next_u64() % n : 0; }

    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

private:
    static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;

    static std::uint64_t derive_stream(std::uint64_t seed, std::uint64_t stream) {
        return mix(seed + kGamma) ^ mix((stream + 1) * 0xD1B54A32D192ED03ULL);
    }

    std::uint64_t base_;
    std::uint64_t counter_ = 0;
};

}  // namespace eegr
