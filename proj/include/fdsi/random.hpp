#pragma once

#include <cmath>
#include <cstdint>

#include "fdsi/common.hpp"

namespace fdsi {

/// splitmix64 step; used both as a stream mixer and to seed generators.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Derived-seed mixing function for per-realization / per-channel streams.
/// derive_seed(s, i) == splitmix64 of s xor (i+1)-th odd multiplier, so
/// distinct indices give decorrelated streams and index 0 differs from the
/// root seed itself.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
    std::uint64_t state = seed ^ ((index + 1) * 0x9E3779B97F4A7C15ULL);
    return splitmix64(state);
}

/// Deterministic generator with explicit uniform/normal mappings.
///
/// The engine is xoshiro256** seeded via splitmix64. The double mappings are
/// spelled out here (rather than std::*_distribution) so that identical seeds
/// give bit-identical streams on every platform, which the golden-file tests
/// rely on.
class Rng {
public:
    explicit Rng(std::uint64_t seed) {
        std::uint64_t sm = seed;
        for (auto& word : state_) word = splitmix64(sm);
        have_cached_normal_ = false;
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    /// Uniform on [0,1) with 53-bit resolution.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform on [0, 2*pi).
    double phase() { return uniform() * 2.0 * kPi; }

    /// Standard normal via Box-Muller; second deviate cached.
    double normal() {
        if (have_cached_normal_) {
            have_cached_normal_ = false;
            return cached_normal_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * kPi * u2;
        cached_normal_ = radius * std::sin(angle);
        have_cached_normal_ = true;
        return radius * std::cos(angle);
    }

    double normal(double std_dev) { return normal() * std_dev; }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    std::uint64_t state_[4];
    double cached_normal_ = 0.0;
    bool have_cached_normal_ = false;
};

}  // namespace fdsi
