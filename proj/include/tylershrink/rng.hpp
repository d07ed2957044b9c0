#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <vector>

namespace tylershrink {

inline std::uint64_t splitmix64_next(std::uint64_t& s) {
    s += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = s;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Counter-based random stream keyed by (seed, hi, lo). Streams with distinct
// keys are independent for Monte Carlo purposes, and a given key always
// produces the same sequence, so results do not depend on thread scheduling.
//
// The engine is std::mt19937_64; the normal/gamma samplers are implemented
// here because std::*_distribution output sequences are implementation-defined
// and the determinism contract must hold across toolchains.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed, std::uint64_t hi = 0, std::uint64_t lo = 0) {
        std::uint64_t s = seed;
        std::uint64_t k1 = splitmix64_next(s);
        s ^= hi * 0x9e3779b97f4a7c15ULL + 0x7f4a7c15ULL;
        std::uint64_t k2 = splitmix64_next(s);
        s ^= lo * 0xbf58476d1ce4e5b9ULL + 0x1ce4e5b9ULL;
        std::uint64_t k3 = splitmix64_next(s);
        engine_.seed(k1 ^ (k2 << 1) ^ (k3 << 2) ^ (hi * 0x100000001b3ULL) ^ lo);
        // decorrelate nearby keys
        engine_.discard(3);
    }

    std::uint64_t next_u64() { return engine_(); }

    // Uniform on (0, 1]; never returns 0 so log() is always safe.
    double uniform() {
        return (static_cast<double>(engine_() >> 11) + 1.0) * 0x1.0p-53;
    }

    // Standard normal via Box-Muller; pairs are cached.
    double normal() {
        if (has_cached_) {
            has_cached_ = false;
            return cached_;
        }
        const double u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        cached_ = r * std::sin(a);
        has_cached_ = true;
        return r * std::cos(a);
    }

    // Circular complex normal with E|w|^2 = 1 (real and imaginary parts N(0, 1/2)).
    std::complex<double> complex_normal() {
        const double u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        return {r * std::cos(a), r * std::sin(a)};
    }

    // Gamma(shape, scale 1), Marsaglia-Tsang; shape < 1 boosted via the U^{1/a} trick.
    double gamma(double shape) {
        if (shape < 1.0) {
            const double g = gamma(shape + 1.0);
            return g * std::pow(uniform(), 1.0 / shape);
        }
        const double d = shape - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x, v;
            do {
                x = normal();
                v = 1.0 + c * x;
            } while (v <= 0.0);
            v = v * v * v;
            const double u = uniform();
            if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
            if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
        }
    }

    // Index in [0, cumulative.size()) by inversion of a cumulative weight table.
    std::size_t categorical(const std::vector<double>& cumulative) {
        const double u = uniform() * cumulative.back();
        std::size_t lo = 0, hi = cumulative.size() - 1;
        while (lo < hi) {
            const std::size_t mid = (lo + hi) / 2;
            if (cumulative[mid] < u)
                lo = mid + 1;
            else
                hi = mid;
        }
        return lo;
    }

private:
    std::mt19937_64 engine_;
    double cached_ = 0.0;
    bool has_cached_ = false;
};

}  // namespace tylershrink
