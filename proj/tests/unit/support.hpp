#pragma once

// Shared helpers for the property-style tests: a tiny deterministic RNG so
// every randomized check is reproducible from a literal seed.

#include <cstdint>
#include <vector>

#include "quasicontract/metric.hpp"

namespace qctest {

struct Rng {
    std::uint64_t state;

    explicit Rng(std::uint64_t seed) : state(seed) {}

    std::uint64_t next() {
        state += 0x9E3779B97F4A7C15ull;
        std::uint64_t z = state;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    double unit() {  // [0, 1)
        return static_cast<double>(next() >> 11) * (1.0 / 9007199254740992.0);
    }

    double range(double lo, double hi) { return lo + (hi - lo) * unit(); }

    std::uint64_t integer(std::uint64_t n) { return next() % n; }  // [0, n)

    quasicontract::Point point(std::size_t dim, double lo, double hi) {
        std::vector<double> coords(dim);
        for (auto& c : coords) c = range(lo, hi);
        return quasicontract::Point(std::move(coords));
    }
};

inline double rel_diff(double a, double b) {
    const double scale = std::max({std::abs(a), std::abs(b), 1e-300});
    return std::abs(a - b) / scale;
}

}  // namespace qctest
