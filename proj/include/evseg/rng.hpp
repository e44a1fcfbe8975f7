#pragma once

#include <cstdint>
#include <random>
#include <string>

#include "evseg/common.hpp"

namespace evseg {

// Deterministic RNG. All draws are built from raw mt19937_64 words so the
// stream is bit-identical across platforms and standard libraries.
struct Rng {
    uint64_t seed;
    std::mt19937_64 g;

    explicit Rng(uint64_t s) : seed(s), g(s) {}

    // Uniform on the closed interval [0, 1]; both endpoints reachable.
    double uniform() {
        const uint64_t x = g() >> 11;  // 53 bits
        return static_cast<double>(x) * (1.0 / 9007199254740991.0);
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n), rejection sampled (no modulo bias).
    int64_t uniform_int(int64_t n) {
        check_config(n > 0, "uniform_int: n must be positive");
        const uint64_t un = static_cast<uint64_t>(n);
        const uint64_t limit = UINT64_MAX - UINT64_MAX % un;
        uint64_t x;
        do {
            x = g();
        } while (x >= limit);
        return static_cast<int64_t>(x % un);
    }

    bool coin() { return (g() & 1u) != 0; }

    // Independent child stream addressed by a label; stable in (seed, label).
    Rng derive(const std::string& label) const {
        uint64_t h = 1469598103934665603ull;  // FNV-1a
        auto mix = [&h](uint64_t byte) {
            h ^= byte;
            h *= 1099511628211ull;
        };
        for (unsigned char c : label) mix(c);
        for (int i = 0; i < 8; ++i) mix((seed >> (8 * i)) & 0xffu);
        // splitmix64 finalizer to spread low-entropy labels
        h += 0x9e3779b97f4a7c15ull;
        h = (h ^ (h >> 30)) * 0xbf58476d1ce4e5b9ull;
        h = (h ^ (h >> 27)) * 0x94d049bb133111ebull;
        h = h ^ (h >> 31);
        return Rng(h);
    }

    Rng derive(const std::string& label, int64_t index) const {
        return derive(label + "#" + std::to_string(index));
    }
};

}  // namespace evseg
