// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

namespace dagwgan {

/// Seedable, splittable 64-bit generator (splitmix64 core).
///
/// split(k) derives an independent stream from the *construction* seed, so
/// stream k is the same no matter how much the parent has been consumed.
/// That makes per-sample streams reproducible independent of worker count
/// or draw order.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : base_(seed), state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    /// Uniform double in [0, 1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform double in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard Box-Muller; the sine partner is discarded so the stream
    /// position is a pure function of the number of calls.
    double normal(double mean = 0.0, double std = 1.0);

    bool bernoulli(double p) { return uniform() < p; }

    /// Uniform integer in [0, n), unbiased by rejection.
    std::uint64_t below(std::uint64_t n);

    /// Random permutation of 0..n-1 (Fisher-Yates).
    std::vector<std::size_t> permutation(std::size_t n);

    /// Independent stream derived from the construction seed.
    Rng split(std::uint64_t stream) const {
        return Rng(mix(base_ ^ (0xD1B54A32D192ED03ULL * (stream + 1))));
    }

    std::uint64_t seed() const { return base_; }

private:
    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    std::uint64_t base_;
    std::uint64_t state_;
};

} // namespace dagwgan
