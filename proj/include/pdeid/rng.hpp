// SPDX-License-Identifier: Apache-2.0
#ifndef PDEID_RNG_HPP
#define PDEID_RNG_HPP

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

namespace pdeid {

// Deterministic 64-bit generator (splitmix64). Used everywhere randomness is
// needed so that trial seeds reproduce across platforms.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // uniform in [0, 1)
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // uniform integer in [0, bound), bound > 0
    std::uint64_t uniform_below(std::uint64_t bound) {
        // rejection sampling to avoid modulo bias
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
        std::uint64_t v = next_u64();
        while (v >= limit) v = next_u64();
        return v % bound;
    }

    // standard normal via Box-Muller
    double normal() {
        if (have_cached_) {
            have_cached_ = false;
            return cached_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * std::numbers::pi * u2;
        cached_ = r * std::sin(a);
        have_cached_ = true;
        return r * std::cos(a);
    }

    // sample k distinct indices from [0, n) by partial Fisher-Yates
    std::vector<long> sample_without_replacement(long n, long k) {
        std::vector<long> idx(static_cast<std::size_t>(n));
        for (long i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i;
        for (long i = 0; i < k; ++i) {
            const long j = i + static_cast<long>(uniform_below(static_cast<std::uint64_t>(n - i)));
            std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
        }
        idx.resize(static_cast<std::size_t>(k));
        return idx;
    }

  private:
    std::uint64_t state_;
    double cached_ = 0.0;
    bool have_cached_ = false;
};

}  // namespace pdeid

#endif
