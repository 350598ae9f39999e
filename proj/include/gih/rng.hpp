#pragma once

#include <cmath>
#include <cstdint>

namespace gih {

namespace detail {
// SplitMix64 finalizer; full avalanche on 64 bits.
inline uint64_t mix64(uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ULL;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBULL;
    z ^= z >> 31;
    return z;
}
constexpr uint64_t kGolden = 0x9E3779B97F4A7C15ULL;
}  // namespace detail

// Counter-based generator: draw i of stream (seed, stream_id) is a hash of
// (seed, stream_id, i). Identical (seed, stream_id) replays the same sequence;
// distinct stream_ids give statistically independent streams, so parallel
// replicas can each derive their own stream and the combined result does not
// depend on scheduling.
class SeededRng {
public:
    explicit SeededRng(uint64_t seed, uint64_t stream_id = 0)
        : seed_(seed), stream_(stream_id) {
        base_ = detail::mix64(detail::mix64(seed) ^ (detail::kGolden * (stream_id + 1)));
    }

    uint64_t seed() const { return seed_; }
    uint64_t stream_id() const { return stream_; }

    // Child stream; derive(a) != derive(b) for a != b, and children of
    // distinct parents never collide in practice (hash-derived stream ids).
    SeededRng derive(uint64_t child) const {
        return SeededRng(seed_, detail::mix64(base_ ^ (detail::kGolden * (child + 1))));
    }
    SeededRng derive(uint64_t a, uint64_t b) const { return derive(a).derive(b); }

    uint64_t next_u64() { return detail::mix64(base_ + (++counter_) * detail::kGolden); }

    // Uniform in [0, 1).
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform in [0, n).
    uint64_t next_below(uint64_t n) { return next_u64() % n; }

    // Standard normal via Box-Muller; the second value of each pair is cached.
    double next_gaussian() {
        if (has_cached_) {
            has_cached_ = false;
            return cached_;
        }
        double u1 = 1.0 - next_double();  // (0, 1]
        double u2 = next_double();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 2.0 * M_PI * u2;
        cached_ = r * std::sin(a);
        has_cached_ = true;
        return r * std::cos(a);
    }

private:
    uint64_t seed_;
    uint64_t stream_;
    uint64_t base_;
    uint64_t counter_ = 0;
    double cached_ = 0.0;
    bool has_cached_ = false;
};

}  // namespace gih
