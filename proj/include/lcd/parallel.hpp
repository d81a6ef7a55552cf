#pragma once

#include <cstddef>
#include <vector>

namespace lcd {

// Deterministic parallel reduction: fixed-size blocks summed in parallel,
// block results accumulated in index order. The result does not depend on
// the number of threads.
template <class F>
double block_sum(std::size_t n, F&& term) {
    constexpr std::size_t kBlock = 2048;
    const std::size_t nblocks = (n + kBlock - 1) / kBlock;
    std::vector<double> partial(nblocks, 0.0);
#pragma omp parallel for schedule(static)
    for (long long b = 0; b < static_cast<long long>(nblocks); ++b) {
        const std::size_t lo = static_cast<std::size_t>(b) * kBlock;
        const std::size_t hi = lo + kBlock < n ? lo + kBlock : n;
        double s = 0.0;
        for (std::size_t i = lo; i < hi; ++i) s += term(i);
        partial[static_cast<std::size_t>(b)] = s;
    }
    double total = 0.0;
    for (double s : partial) total += s;
    return total;
}

}  // namespace lcd
