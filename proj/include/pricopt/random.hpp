#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace pricopt {

// Portable random stream. The engine is std::mt19937_64, whose output
// sequence is fixed by the C++ standard; the conversions below are written
// out by hand so that every platform (and any port to another language)
// reproduces the same draws from the same seed.
//
//   uniform01():      (next() >> 11) * 2^-53, in [0, 1)
//   uniform(a, b):    a + (b - a) * uniform01()
//   index(n):         rejection sampling on next() to avoid modulo bias
class Rng {
public:
    static constexpr std::string_view kGeneratorName = "mt19937_64";

    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // Uniform integer in [0, n). n must be > 0.
    std::uint64_t index(std::uint64_t n) {
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x = next();
        while (x >= limit) x = next();
        return x % n;
    }

    bool bernoulli(double p) { return uniform01() < p; }

private:
    std::mt19937_64 engine_;
};

// splitmix64 finalizer, used to derive independent sub-stream seeds.
constexpr std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

} // namespace pricopt
