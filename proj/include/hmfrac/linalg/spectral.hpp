#pragma once

#include <cmath>
#include <cstdint>

#include "hmfrac/linalg/linear_operator.hpp"
#include "hmfrac/random.hpp"

namespace hmfrac::linalg {

/// Power iteration estimate of ‖A‖ for symmetric positive semidefinite A,
/// from a seeded random start. Returns the largest ‖Ax‖/‖x‖ seen, which
/// never exceeds the true norm.
inline double estimate_spectral_norm(const LinearOperator& a, int iters = 30, std::uint64_t seed = 0) {
    const auto n = a.dimension();
    if (n == 0) return 0.0;
    Rng rng(seed);
    Vector x(n), y(n);
    for (auto& v : x) v = rng.normal();
    double xn = norm2(x);
    for (auto& v : x) v /= xn;
    double estimate = 0.0;
    for (int k = 0; k < iters; ++k) {
        a.apply(x, y);
        const double yn = norm2(y);
        if (yn == 0.0) break;
        estimate = std::max(estimate, yn);
        for (std::size_t i = 0; i < n; ++i) x[i] = y[i] / yn;
    }
    return estimate;
}

}  // namespace hmfrac::linalg
