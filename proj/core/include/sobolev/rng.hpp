#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace sobolev {

// Deterministic random source. std::mt19937_64's engine output is pinned
// bit-for-bit by the standard, but the standard *distributions* are not, so
// uniform and normal draws are derived here by hand. Identical seeds give
// identical streams on every platform and compiler.
class Rng {
public:
    explicit Rng(uint64_t seed) : eng_(seed) {}

    uint64_t bits() { return eng_(); }

    // Uniform in [0, 1) with 53 random bits.
    double uniform01() { return double(eng_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // Box-Muller with a cached spare.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform01();
        while (u1 <= 0.0) u1 = uniform01();
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

    // Uniform integer in [0, n).
    uint64_t below(uint64_t n) {
        // rejection sampling keeps the draw exactly uniform
        const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        uint64_t r = eng_();
        while (r >= limit) r = eng_();
        return r % n;
    }

private:
    std::mt19937_64 eng_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

// Stable seed derivation: every experiment takes one master seed and derives
// per-purpose streams ("data", "init", "batch", ...) so adding a consumer
// never shifts another stream. FNV-1a over the label and index, mixed
// through splitmix64. The scheme is part of the reproducibility contract;
// changing it changes every derived stream.
uint64_t derive_seed(uint64_t master, std::string_view purpose, uint64_t index = 0);

}  // namespace sobolev
