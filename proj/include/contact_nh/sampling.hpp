#pragma once

#include <cstdint>
#include <random>

namespace contact_nh {

/// Seeded uniform generator whose output depends only on the seed: the
/// mt19937_64 sequence is fixed by the standard, and the conversion to
/// doubles is done here rather than by a library distribution.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform on [0, 1) with 53 random bits.
    double unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }

private:
    std::mt19937_64 engine_;
};

}  // namespace contact_nh
