#pragma once

#include <cstdint>
#include <string_view>

namespace tabletop {

/// SplitMix64 generator. The whole state is one word so scenes can carry it in
/// their snapshots and replay draws bit-for-bit on any platform.
class SplitMix64 {
public:
    explicit SplitMix64(uint64_t state = 0) noexcept : state_(state) {}

    uint64_t next() noexcept {
        uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    /// Uniform double in [0, 1) from the top 53 bits.
    double uniform() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

    uint64_t state() const noexcept { return state_; }

private:
    uint64_t state_;
};

/// Stateless mix of several words into one seed.
inline uint64_t mix_seed(uint64_t a, uint64_t b) noexcept {
    SplitMix64 g(a ^ (b * 0xD1B54A32D192ED03ULL));
    g.next();
    return g.next();
}

/// FNV-1a, used to fold string ids into seeds.
inline uint64_t fnv1a(std::string_view s) noexcept {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace tabletop
