#pragma once

// Counter-based splittable random streams. A stream is a pure function of
// (meta-seed, derivation path, counter), so any sub-experiment -- one
// replication, one player, one time step -- can be reproduced in isolation
// and streams handed to parallel tasks never collide.

#include <cstdint>

namespace cmfg {

namespace detail {

inline std::uint64_t mix64(std::uint64_t z) {
    // SplitMix64 finalizer.
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

}  // namespace detail

class RngStream {
  public:
    explicit RngStream(std::uint64_t seed) : state_(detail::mix64(seed ^ 0x8E51'2F0A'6C3D'11B7ULL)) {}

    /// Child stream addressed by `key`; derivation is order-sensitive.
    RngStream derive(std::uint64_t key) const {
        RngStream child(0);
        child.state_ = detail::mix64(state_ ^ detail::mix64(key + 0xA076'1D64'78BD'642FULL));
        child.counter_ = 0;
        return child;
    }

    std::uint64_t next_u64() { return detail::mix64(state_ + 0x9E3779B97F4A7C15ULL * ++counter_); }

    /// Uniform draw in [0, 1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) { return next_u64() % n; }

  private:
    std::uint64_t state_ = 0;
    std::uint64_t counter_ = 0;
};

}  // namespace cmfg
