#pragma once

#include <cstdint>
#include <random>

namespace lcd {

// Deterministic generator with hand-rolled variate transforms so that a
// given seed reproduces the same stream regardless of standard library.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    // uniform on (0, 1), endpoints excluded
    double uniform();

    // standard normal via inverse CDF
    double normal();

    // Gamma(shape, 1) via Marsaglia-Tsang, with the shape<1 boost
    double gamma(double shape);

    std::uint64_t raw() { return engine_(); }

private:
    std::mt19937_64 engine_;
};

}  // namespace lcd
