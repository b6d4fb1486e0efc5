#pragma once

#include <cstdint>
#include <random>

namespace nldiff {

// mt19937_64 output is fixed by the standard; the distributions are not, so
// samples are derived from raw engine bits to stay identical across toolchains.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 42) : engine_(seed) {}

    // Uniform in [0, 1).
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n).
    std::uint64_t index(std::uint64_t n) { return n == 0 ? 0 : engine_() % n; }

private:
    std::mt19937_64 engine_;
};

}  // namespace nldiff
