#include "lcd/rng.hpp"

#include <cmath>

#include "lcd/special.hpp"

namespace lcd {

double Rng::uniform() {
    // 53-bit mantissa, shifted into (0,1)
    std::uint64_t r = engine_() >> 11;
    double u = (static_cast<double>(r) + 0.5) * (1.0 / 9007199254740992.0);
    return u;
}

double Rng::normal() { return special::norm_quantile(uniform()); }

double Rng::gamma(double shape) {
    if (shape < 1.0) {
        // boost: G(a) = G(a+1) * U^{1/a}
        double u = uniform();
        return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x = normal();
        double v = 1.0 + c * x;
        if (v <= 0.0) continue;
        v = v * v * v;
        double u = uniform();
        double x2 = x * x;
        if (u < 1.0 - 0.0331 * x2 * x2) return d * v;
        if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v;
    }
}

}  // namespace lcd
