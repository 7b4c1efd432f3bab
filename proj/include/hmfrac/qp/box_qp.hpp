#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>

#include "hmfrac/linalg/linear_operator.hpp"

namespace hmfrac::qp {

using linalg::LinearOperator;
using linalg::Vector;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// argmin ½λᵀFλ − dᵀλ subject to l ≤ λ ≤ u; bounds may be infinite.
struct BoxQP {
    LinearOperator hessian;
    Vector linear;
    Vector lower;
    Vector upper;

    std::size_t dimension() const noexcept { return linear.size(); }

    void check() const {
        const auto n = linear.size();
        if (hessian.dimension() != n || lower.size() != n || upper.size() != n)
            throw DimensionError("BoxQP: inconsistent dimensions");
        for (std::size_t j = 0; j < n; ++j)
            if (!(lower[j] <= upper[j]) || lower[j] == kInf || upper[j] == -kInf)
                throw Error("BoxQP: empty box at component " + std::to_string(j));
    }

    double objective(std::span<const double> lambda) const {
        const auto f = hessian(lambda);
        return 0.5 * linalg::dot(lambda, f) - linalg::dot(linear, lambda);
    }
};

struct GradientSplit {
    Vector free;
    Vector chopped;
};

/// Free and chopped parts of g at a feasible λ. Bound activity is decided by
/// exact equality, so callers keep iterates exactly on the bound.
inline GradientSplit gradient_split(std::span<const double> g, std::span<const double> lambda,
                                    std::span<const double> lower, std::span<const double> upper) {
    const auto n = g.size();
    if (lambda.size() != n || lower.size() != n || upper.size() != n)
        throw DimensionError("gradient_split: dimension mismatch");
    GradientSplit s{Vector(n, 0.0), Vector(n, 0.0)};
    for (std::size_t j = 0; j < n; ++j) {
        if (lambda[j] < lower[j] || lambda[j] > upper[j])
            throw Error("gradient_split: infeasible component " + std::to_string(j));
        if (lambda[j] == lower[j])
            s.chopped[j] = std::min(g[j], 0.0);
        else if (lambda[j] == upper[j])
            s.chopped[j] = std::max(g[j], 0.0);
        else
            s.free[j] = g[j];
    }
    return s;
}

/// Componentwise clamp onto [l, u].
inline Vector project_box(std::span<const double> lambda, std::span<const double> lower,
                          std::span<const double> upper) {
    if (lambda.size() != lower.size() || lambda.size() != upper.size())
        throw DimensionError("project_box: dimension mismatch");
    Vector r(lambda.size());
    for (std::size_t j = 0; j < r.size(); ++j) r[j] = std::min(upper[j], std::max(lower[j], lambda[j]));
    return r;
}

/// Largest α ≥ 0 with λ − αp inside the box; +∞ if the ray never leaves it.
inline double max_feasible_step(std::span<const double> lambda, std::span<const double> p,
                                std::span<const double> lower, std::span<const double> upper) {
    if (lambda.size() != p.size() || lambda.size() != lower.size() || lambda.size() != upper.size())
        throw DimensionError("max_feasible_step: dimension mismatch");
    double alpha = kInf;
    for (std::size_t j = 0; j < p.size(); ++j) {
        if (p[j] > 0.0 && lower[j] > -kInf)
            alpha = std::min(alpha, (lambda[j] - lower[j]) / p[j]);
        else if (p[j] < 0.0 && upper[j] < kInf)
            alpha = std::min(alpha, (lambda[j] - upper[j]) / p[j]);
    }
    return std::max(alpha, 0.0);
}

}  // namespace hmfrac::qp
