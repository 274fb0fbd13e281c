#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>

namespace comdp {

// SplitMix64 generator. Self-contained so that seeded experiments reproduce
// bit-identically across platforms and standard-library versions; streams are
// derived by hashing (seed, key...) tuples, which lets parallel workers draw
// independent reproducible sequences without shared state.
struct Rng {
    std::uint64_t state;

    explicit Rng(std::uint64_t seed) : state(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// Uniform in [0, 1) with 53-bit resolution.
    double next_double() { return double(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    /// Uniform integer in [0, n), n > 0.
    std::uint64_t next_below(std::uint64_t n) {
        return std::uint64_t((static_cast<unsigned __int128>(next_u64()) * n) >> 64);
    }

    /// Exponential(1) via inversion; strictly positive.
    double exponential() {
        double u;
        do {
            u = next_double();
        } while (u >= 1.0);
        return -std::log1p(-u);
    }

    /// Normal(mean, stddev) via Box-Muller. Draws two uniforms per call.
    double normal(double mean, double stddev) {
        double u1;
        do {
            u1 = next_double();
        } while (u1 <= 0.0);
        double u2 = next_double();
        double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
        return mean + stddev * z;
    }

    /// Poisson(lambda) via Knuth's product method; fine for the small rates used here.
    long long poisson(double lambda) {
        double limit = std::exp(-lambda);
        long long k = 0;
        double p = 1.0;
        do {
            ++k;
            p *= next_double();
        } while (p > limit);
        return k - 1;
    }
};

/// Derive an independent stream from a base seed and a tuple of integer keys.
inline Rng make_stream(std::uint64_t seed, std::initializer_list<std::uint64_t> keys) {
    Rng r(seed ^ 0x5851f42d4c957f2dULL);
    for (std::uint64_t k : keys) {
        r.state = r.next_u64() ^ (k * 0x9e3779b97f4a7c15ULL + 0x2545f4914f6cdd1dULL);
    }
    r.next_u64();
    return r;
}

} // namespace comdp
