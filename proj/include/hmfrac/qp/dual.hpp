#pragma once

#include <atomic>
#include <memory>
#include <span>

#include "hmfrac/linalg/factor.hpp"
#include "hmfrac/qp/box_qp.hpp"

namespace hmfrac::qp {

using linalg::SparseMatrix;

/// argmin ½xᵀAx − bᵀx subject to B_I x ≤ c_I, A symmetric positive definite.
struct InequalityQP {
    SparseMatrix a;
    Vector b;
    SparseMatrix constraints;  // B_I
    Vector bounds;             // c_I
};

/// Dual of an InequalityQP: a BoxQP over the multipliers with
/// F = B_I A⁻¹ B_Iᵀ (applied implicitly through a Cholesky factor of A),
/// d = B_I A⁻¹ b − c_I, l = 0 and u = +∞.
struct DualQP {
    BoxQP box;
    std::shared_ptr<const linalg::SpdFactor> factor;
    std::shared_ptr<const SparseMatrix> constraints;
    Vector b;
    Vector bounds;
    /// Counts every application of F, across all copies sharing the operator.
    std::shared_ptr<std::atomic<long>> hessian_counter;

    std::size_t dimension() const noexcept { return box.dimension(); }
    long hessian_mults() const noexcept { return hessian_counter ? hessian_counter->load() : 0; }

    /// Same A, B_I and c_I with a new linear term b; F and its factor are shared.
    DualQP with_rhs(std::span<const double> new_b) const {
        if (new_b.size() != factor->dimension()) throw DimensionError("DualQP::with_rhs: dimension mismatch");
        DualQP d = *this;
        d.b.assign(new_b.begin(), new_b.end());
        d.box.linear = linear_term(d.b);
        return d;
    }

    Vector linear_term(std::span<const double> rhs) const {
        const auto y = factor->solve(rhs);
        auto d = linalg::multiply(*constraints, y);
        for (std::size_t i = 0; i < d.size(); ++i) d[i] -= bounds[i];
        return d;
    }
};

/// Factorizes A once and builds the implicit dual Hessian.
inline DualQP dualize(const InequalityQP& p) {
    const auto n = p.a.rows();
    const auto m = p.constraints.rows();
    if (p.b.size() != n || p.constraints.cols() != n || p.bounds.size() != m)
        throw DimensionError("dualize: inconsistent dimensions");

    // F_ii = b_iᵀA⁻¹b_i > 0 exactly when row i of B_I is nonzero.
    for (std::size_t i = 0; i < m; ++i) {
        bool nonzero = false;
        for (std::size_t k = p.constraints.row_ptr()[i]; k < p.constraints.row_ptr()[i + 1]; ++k)
            nonzero = nonzero || p.constraints.values()[k] != 0.0;
        if (!nonzero) throw Error("dualize: constraint row " + std::to_string(i) + " is zero (dual Hessian singular)");
    }

    DualQP d;
    d.factor = std::make_shared<const linalg::SpdFactor>(linalg::factor_spd(p.a));
    d.constraints = std::make_shared<const SparseMatrix>(p.constraints);
    d.b = p.b;
    d.bounds = p.bounds;
    d.hessian_counter = std::make_shared<std::atomic<long>>(0);

    auto factor = d.factor;
    auto bi = d.constraints;
    auto counter = d.hessian_counter;
    d.box.hessian = LinearOperator(m, [factor, bi, counter](std::span<const double> x, std::span<double> y) {
        const auto t = linalg::multiply_transpose(*bi, x);
        const auto s = factor->solve(t);
        bi->apply(s, y);
        counter->fetch_add(1, std::memory_order_relaxed);
    });
    d.box.linear = d.linear_term(d.b);
    d.box.lower.assign(m, 0.0);
    d.box.upper.assign(m, kInf);
    return d;
}

/// x = A⁻¹(b − B_Iᵀλ)
inline Vector recover_primal(const DualQP& dq, std::span<const double> lambda) {
    if (lambda.size() != dq.dimension()) throw DimensionError("recover_primal: multiplier dimension mismatch");
    auto r = dq.b;
    if (!lambda.empty()) {
        const auto t = linalg::multiply_transpose(*dq.constraints, lambda);
        for (std::size_t i = 0; i < r.size(); ++i) r[i] -= t[i];
    }
    return dq.factor->solve(r);
}

}  // namespace hmfrac::qp
