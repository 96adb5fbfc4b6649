#pragma once

#include "cdf/types.hpp"

#include <cstdint>
#include <random>

namespace cdf {

/// Seeded random source. Conversions from raw engine output are done here
/// rather than through <random> distributions so streams are identical
/// across standard library implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    /// Uniform in [0, 1).
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [lo, hi], unbiased.
    int uniform_int(int lo, int hi);

    /// Standard normal (Box-Muller, no caching).
    double normal();

    /// Uniformly distributed unit vector in R^3.
    Vec3 unit_vector();

    /// Deterministic child seed for stream `index` of `seed` (splitmix64).
    static std::uint64_t derive(std::uint64_t seed, std::uint64_t index);

private:
    std::mt19937_64 engine_;
};

}  // namespace cdf
