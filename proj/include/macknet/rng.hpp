#ifndef MACKNET_RNG_HPP
#define MACKNET_RNG_HPP

#include <cstdint>
#include <cmath>

// Deterministic, platform-independent random number generation.
//
// All stochastic components (bootstrap resampling, weight initialization,
// dropout) draw from xoshiro256** streams seeded through the splitmix64
// mixer, so a (master seed, stream id) pair always yields the same draws
// on every platform and regardless of how work is scheduled across
// threads. No <random> distributions are used anywhere: their output is
// not pinned down by the standard.
//
// References: Blackman & Vigna, "Scrambled linear pseudorandom number
// generators" (xoshiro256**); Steele, Lea & Flood (splitmix64 finalizer).

namespace macknet {

/// splitmix64 finalizer. Bijective 64-bit mix, used both as a standalone
/// sequence generator and to derive substream seeds.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// xoshiro256** generator. 256-bit state, period 2^256 - 1.
class Rng {
public:
    Rng() : Rng(0) {}

    explicit Rng(std::uint64_t seed) {
        // Canonical seeding: fill the state with splitmix64 outputs.
        std::uint64_t sm = seed;
        for (auto& word : state_) {
            sm += 0x9e3779b97f4a7c15ULL;
            std::uint64_t z = sm;
            z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
            z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
            word = z ^ (z >> 31);
        }
    }

    /// Independent substream: mixes the stream id into the seed through two
    /// rounds of splitmix64 so that nearby ids give unrelated states.
    static Rng stream(std::uint64_t seed, std::uint64_t stream_id) {
        return Rng(mix64(seed ^ mix64(stream_id + 0x632be59bd9b4e019ULL)));
    }

    std::uint64_t next() {
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

    /// Uniform double in [0, 1), 53 random bits.
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    /// Uniform double in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Unbiased integer in [0, n). Lemire's multiply-shift with rejection.
    std::uint64_t below(std::uint64_t n) {
        std::uint64_t x = next();
        __uint128_t m = static_cast<__uint128_t>(x) * n;
        auto lo = static_cast<std::uint64_t>(m);
        if (lo < n) {
            const std::uint64_t threshold = -n % n;
            while (lo < threshold) {
                x = next();
                m = static_cast<__uint128_t>(x) * n;
                lo = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::uint64_t>(m >> 64);
    }

    /// Standard normal via Box-Muller (the second variate is discarded so
    /// the draw count per call is fixed).
    double normal() {
        double u1 = uniform();
        const double u2 = uniform();
        if (u1 < 0x1.0p-60) u1 = 0x1.0p-60;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

    bool bernoulli(double p) { return uniform() < p; }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }

    std::uint64_t state_[4];
};

} // namespace macknet

#endif
