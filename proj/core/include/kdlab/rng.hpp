#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace kdlab::rng {

/// Advances a splitmix64 state and returns the next value. Used for seed
/// derivation so that child streams are decorrelated from the parent seed.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Derives a child seed from a base seed and a salt. Deterministic and
/// platform independent.
inline std::uint64_t mix_seed(std::uint64_t base, std::uint64_t salt) {
    std::uint64_t state = base;
    std::uint64_t a = splitmix64(state);
    state ^= salt * 0x9e3779b97f4a7c15ULL;
    std::uint64_t b = splitmix64(state);
    return a ^ (b + 0x632be59bd9b4e019ULL);
}

/// Deterministic random stream built on std::mt19937_64 (whose output
/// sequence is fixed by the standard) with hand-rolled distribution
/// transforms, so generated values are identical across platforms and
/// standard-library implementations.
class Engine {
public:
    explicit Engine(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    /// Uniform double in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    /// Standard normal via Box-Muller; the second value of each pair is
    /// cached so consecutive calls consume bits at half rate.
    double normal();

    /// Uniform integer in [0, n) via Lemire's multiply-shift reduction.
    /// Slightly biased for astronomically large n, which never occurs here.
    std::size_t bounded(std::size_t n) {
        return static_cast<std::size_t>(
            (static_cast<unsigned __int128>(gen_()) * n) >> 64);
    }

    /// In-place Fisher-Yates shuffle.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = bounded(i);
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::mt19937_64 gen_;
    bool has_cached_ = false;
    double cached_ = 0.0;
};

inline double Engine::normal() {
    if (has_cached_) {
        has_cached_ = false;
        return cached_;
    }
    double u1 = 0.0;
    do {
        u1 = uniform01();
    } while (u1 <= 0.0);
    double u2 = uniform01();
    double r = std::sqrt(-2.0 * std::log(u1));
    double theta = 6.283185307179586476925286766559 * u2;
    cached_ = r * std::sin(theta);
    has_cached_ = true;
    return r * std::cos(theta);
}

}  // namespace kdlab::rng
