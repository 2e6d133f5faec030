#pragma once

#include <cstdint>

namespace dra {

// splitmix64: the project-wide pseudo-random generator.  Chosen because its
// output is a pure function of the 64-bit state, so seeded runs reproduce
// bit-for-bit across platforms and standard-library versions.
struct SplitMix64 {
    std::uint64_t state;

    explicit SplitMix64(std::uint64_t seed) : state(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1) with 53 bits of mantissa.
    double next_double() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    // Uniform in [0, n).  Modulo reduction; bias is irrelevant at the scales
    // used here and keeps the sequence platform-stable.
    std::uint64_t below(std::uint64_t n) { return next() % n; }
};

} // namespace dra
