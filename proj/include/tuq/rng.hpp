/// @file  rng.hpp
/// @brief Deterministic random stream with explicit sub-stream spawning.
///
/// All randomized operations in tuq take an Rng by reference. Distributions
/// are implemented on top of the raw 64-bit generator output so that a fixed
/// seed reproduces every draw bit-exactly across platforms and compilers
/// (the standard library distributions make no such guarantee).

#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>

namespace tuq {

namespace detail {

/// splitmix64 finalizer, used to decorrelate seeds of spawned streams.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

} // namespace detail

class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(detail::mix64(seed)) {}

    /// Uniform on [0, 1). 53-bit resolution.
    double uniform() {
        return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    }

    /// Uniform on [lo, hi).
    double uniform(double lo, double hi) {
        return lo + (hi - lo) * uniform();
    }

    /// Standard normal via Box-Muller.
    double normal() {
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) *
               std::cos(2.0 * std::numbers::pi * u2);
    }

    /// Unbiased integer on [0, bound), bound >= 1.
    std::uint64_t integer(std::uint64_t bound) {
        const std::uint64_t limit =
            std::numeric_limits<std::uint64_t>::max() -
            std::numeric_limits<std::uint64_t>::max() % bound;
        std::uint64_t v = gen_();
        while (v >= limit) v = gen_();
        return v % bound;
    }

    /// Derives an independent child stream; advances this stream by one draw.
    Rng spawn() {
        return Rng(gen_());
    }

    /// Raw 64-bit draw.
    std::uint64_t bits() { return gen_(); }

private:
    std::mt19937_64 gen_;
};

} // namespace tuq
