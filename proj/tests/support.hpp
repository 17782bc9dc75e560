#pragma once

// Seeded generators and small comparison helpers shared by the suites.

#include <complex>
#include <cstdint>
#include <random>
#include <vector>

#include "spinlab/polyfam.hpp"

namespace spinlab::testing {

class Gen {
public:
    explicit Gen(std::uint64_t seed) : rng_(seed) {}

    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
    int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }

    /// Uniform in the disk |z - center| < radius.
    cplx disk(cplx center, double radius)
    {
        const double r = radius * std::sqrt(uniform(0.0, 1.0));
        return center + std::polar(r, uniform(0.0, 2.0 * std::numbers::pi));
    }

    cplx box(double half_x, double half_y) { return {uniform(-half_x, half_x), uniform(-half_y, half_y)}; }

    /// Partition of d - 1 into 1..max_parts positive parts.
    std::vector<int> partition(int d, int max_parts)
    {
        int remaining = d - 1;
        std::vector<int> parts;
        while (remaining > 0) {
            const int slots = max_parts - static_cast<int>(parts.size());
            const int k = slots <= 1 ? remaining : integer(1, remaining);
            parts.push_back(k);
            remaining -= k;
        }
        return parts;
    }

    std::mt19937_64& engine() { return rng_; }

private:
    std::mt19937_64 rng_;
};

inline double dist(cplx a, cplx b) { return std::abs(a - b); }

} // namespace spinlab::testing
