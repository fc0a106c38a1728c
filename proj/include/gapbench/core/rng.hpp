#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace gapbench {

// Counter-split deterministic RNG (xoshiro256++ seeded through splitmix64).
//
// std::random distributions are implementation-defined, so everything here is
// generated from raw bits; trajectories are bit-identical across platforms for
// a given (seed, stream). Independent streams are derived by hashing the
// master seed with stream labels, so parallel consumers never share state.
class Rng {
public:
    explicit Rng(std::uint64_t seed, std::uint64_t stream = 0) {
        std::uint64_t x = splitmix(seed) ^ splitmix(stream * 0x9e3779b97f4a7c15ull + 0x2545f4914f6cdd1dull);
        for (auto& si : s_) {
            x += 0x9e3779b97f4a7c15ull;
            si = splitmix(x);
        }
    }

    // Derives an independent stream from a master seed and up to three labels.
    static Rng derive(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0) {
        std::uint64_t h = splitmix(seed);
        h = splitmix(h ^ (a + 0x9e3779b97f4a7c15ull));
        h = splitmix(h ^ (b + 0xbf58476d1ce4e5b9ull));
        h = splitmix(h ^ (c + 0x94d049bb133111ebull));
        return Rng(h, 0);
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // Uniform on [0, 1) with 53-bit resolution.
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // Zero-mean Gaussian via Box-Muller (no cached spare; one value per call).
    double normal(double mean = 0.0, double stddev = 1.0) {
        double u1 = uniform01();
        while (u1 <= 0.0) u1 = uniform01();
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        return mean + stddev * r * std::cos(2.0 * std::numbers::pi * u2);
    }

    // Uniform integer on [lo, hi] inclusive, rejection-sampled to avoid bias.
    std::uint64_t uniform_index(std::uint64_t n) {
        // n must be >= 1; returns value in [0, n).
        const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
        std::uint64_t x = next_u64();
        while (x >= limit) x = next_u64();
        return x % n;
    }

    int uniform_int(int lo, int hi) {
        return lo + static_cast<int>(uniform_index(static_cast<std::uint64_t>(hi - lo + 1)));
    }

private:
    static std::uint64_t splitmix(std::uint64_t x) {
        x += 0x9e3779b97f4a7c15ull;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
        return x ^ (x >> 31);
    }

    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    std::uint64_t s_[4];
};

// Stream labels for Rng::derive. Keeping them in one place guarantees that
// distinct consumers (reset, RFI, noise, ...) never collide.
namespace stream {
inline constexpr std::uint64_t kReset = 1;
inline constexpr std::uint64_t kActionNoise = 2;
inline constexpr std::uint64_t kRfi = 3;
inline constexpr std::uint64_t kObsNoise = 4;
inline constexpr std::uint64_t kEnvSample = 5;
inline constexpr std::uint64_t kExploration = 6;
inline constexpr std::uint64_t kInit = 7;
inline constexpr std::uint64_t kReplay = 8;
inline constexpr std::uint64_t kDropout = 9;
inline constexpr std::uint64_t kEval = 10;
inline constexpr std::uint64_t kProbe = 11;
inline constexpr std::uint64_t kDe = 12;
}  // namespace stream

}  // namespace gapbench
