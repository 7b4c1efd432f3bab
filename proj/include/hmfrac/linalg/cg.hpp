#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <span>

#include "hmfrac/linalg/linear_operator.hpp"

namespace hmfrac::linalg {

struct CgResult {
    Vector x;
    int iterations = 0;
    bool converged = false;
    double residual_norm = 0.0;
};

/// Conjugate gradients for a symmetric positive (semi)definite operator.
/// Stops when ‖Ax − b‖ ≤ tol·‖b‖; hitting max_iter is reported through
/// `converged == false` together with the last iterate. The optional observer
/// sees every iterate, starting with the initial guess.
inline CgResult cg_solve(const LinearOperator& a, std::span<const double> b, double tol, int max_iter,
                         std::optional<std::span<const double>> x0 = std::nullopt,
                         const std::function<void(std::span<const double>)>& observer = {}) {
    const auto n = a.dimension();
    if (b.size() != n) throw DimensionError("cg_solve: rhs dimension mismatch");
    CgResult res;
    res.x = x0 ? Vector(x0->begin(), x0->end()) : Vector(n, 0.0);
    if (res.x.size() != n) throw DimensionError("cg_solve: initial guess dimension mismatch");
    if (observer) observer(res.x);

    const double bnorm = norm2(b);
    Vector r(n), ap(n);
    a.apply(res.x, ap);
    for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - ap[i];
    double rr = dot(r, r);
    res.residual_norm = std::sqrt(rr);
    const double target = tol * bnorm;
    if (res.residual_norm <= target) {
        res.converged = true;
        return res;
    }
    Vector p = r;
    for (int k = 0; k < max_iter; ++k) {
        a.apply(p, ap);
        const double pap = dot(p, ap);
        if (!(pap > 0.0) || !std::isfinite(pap)) break;  // p in the null space, or breakdown
        const double alpha = rr / pap;
        axpy(alpha, p, res.x);
        axpy(-alpha, ap, r);
        ++res.iterations;
        if (observer) observer(res.x);
        const double rr_new = dot(r, r);
        res.residual_norm = std::sqrt(rr_new);
        if (res.residual_norm <= target) {
            res.converged = true;
            return res;
        }
        const double beta = rr_new / rr;
        rr = rr_new;
        for (std::size_t i = 0; i < n; ++i) p[i] = r[i] + beta * p[i];
    }
    return res;
}

}  // namespace hmfrac::linalg
