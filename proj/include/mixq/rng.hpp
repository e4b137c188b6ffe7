#pragma once

#include <cstdint>

namespace mixq {

// SplitMix64. This exact recurrence is part of the tool's external
// contract: runs keyed by --seed must be reproducible by independent
// reimplementations, so we spell it out instead of using std::mt19937.
//
//   state += 0x9E3779B97F4A7C15
//   z = state
//   z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//   z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//   return z ^ (z >> 31)
//
// Bounded draws use next() % bound (the modulo bias is irrelevant for
// the small bounds used here and keeps the definition one line).
class SplitMix64 {
public:
    explicit SplitMix64(uint64_t seed) : state_(seed) {}

    uint64_t next() {
        state_ += 0x9E3779B97F4A7C15ull;
        uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    // Uniform in [0, bound). bound must be nonzero.
    uint64_t bounded(uint64_t bound) { return next() % bound; }

    // Uniform in [lo, hi] inclusive.
    uint64_t range(uint64_t lo, uint64_t hi) { return lo + bounded(hi - lo + 1); }

    // Canonical double in [0, 1).
    double canonical() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

private:
    uint64_t state_;
};

}  // namespace mixq
