#pragma once

#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>
#include <Eigen/SparseLU>
#include <cmath>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "hmfrac/linalg/sparse_matrix.hpp"

namespace hmfrac::linalg {

namespace detail {

inline Eigen::SparseMatrix<double> to_eigen(const SparseMatrix& m) {
    std::vector<Eigen::Triplet<double>> t;
    t.reserve(m.nnz());
    m.for_each([&](std::size_t i, std::size_t j, double v) {
        t.emplace_back(static_cast<int>(i), static_cast<int>(j), v);
    });
    Eigen::SparseMatrix<double> e(static_cast<Eigen::Index>(m.rows()), static_cast<Eigen::Index>(m.cols()));
    e.setFromTriplets(t.begin(), t.end());
    e.makeCompressed();
    return e;
}

inline bool all_finite(std::span<const double> v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

}  // namespace detail

/// Sparse Cholesky factor of a symmetric positive definite matrix.
class SpdFactor {
public:
    std::size_t dimension() const noexcept { return n_; }

    Vector solve(std::span<const double> rhs) const {
        if (rhs.size() != n_) throw DimensionError("SpdFactor::solve: dimension mismatch");
        Vector x(n_);
        if (n_ == 0) return x;
        Eigen::Map<const Eigen::VectorXd> b(rhs.data(), static_cast<Eigen::Index>(n_));
        Eigen::Map<Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(n_)) = llt_->solve(b);
        return x;
    }

private:
    friend SpdFactor factor_spd(const SparseMatrix&);
    using Llt = Eigen::SimplicialLLT<Eigen::SparseMatrix<double>, Eigen::Lower, Eigen::AMDOrdering<int>>;

    std::size_t n_ = 0;
    std::shared_ptr<const Llt> llt_;
};

inline SpdFactor factor_spd(const SparseMatrix& m) {
    if (m.rows() != m.cols()) throw DimensionError("factor_spd: matrix is not square");
    if (!m.is_symmetric(1e-12)) throw FactorizationError("factor_spd: matrix is not symmetric");
    SpdFactor f;
    f.n_ = m.rows();
    if (f.n_ == 0) return f;
    auto llt = std::make_shared<SpdFactor::Llt>();
    llt->compute(detail::to_eigen(m));
    if (llt->info() != Eigen::Success)
        throw FactorizationError("factor_spd: non-positive pivot, matrix is not positive definite");
    f.llt_ = std::move(llt);
    return f;
}

/// LU factor of a general square sparse matrix. Rows and columns are
/// equilibrated (Ruiz scaling) before factoring.
class GeneralFactor {
public:
    std::size_t dimension() const noexcept { return n_; }

    Vector solve(std::span<const double> rhs) const {
        if (rhs.size() != n_) throw DimensionError("GeneralFactor::solve: dimension mismatch");
        Vector x(n_);
        if (n_ == 0) return x;
        Eigen::VectorXd b(static_cast<Eigen::Index>(n_));
        for (std::size_t i = 0; i < n_; ++i) b[static_cast<Eigen::Index>(i)] = row_scale_[i] * rhs[i];
        const Eigen::VectorXd y = lu_->solve(b);
        for (std::size_t i = 0; i < n_; ++i) x[i] = col_scale_[i] * y[static_cast<Eigen::Index>(i)];
        if (!detail::all_finite(x)) throw FactorizationError("GeneralFactor::solve: non-finite solution");
        return x;
    }

private:
    friend GeneralFactor factor_general(const SparseMatrix&);
    using Lu = Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>>;

    std::size_t n_ = 0;
    Vector row_scale_;
    Vector col_scale_;
    std::shared_ptr<Lu> lu_;
};

inline GeneralFactor factor_general(const SparseMatrix& m) {
    if (m.rows() != m.cols()) throw DimensionError("factor_general: matrix is not square");
    GeneralFactor f;
    f.n_ = m.rows();
    if (f.n_ == 0) return f;

    const auto n = f.n_;
    Vector r(n, 1.0), c(n, 1.0);
    auto vals = std::vector<double>(m.values().begin(), m.values().end());
    const auto rp = m.row_ptr();
    const auto ci = m.col_idx();
    for (int sweep = 0; sweep < 8; ++sweep) {
        Vector rmax(n, 0.0), cmax(n, 0.0);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t k = rp[i]; k < rp[i + 1]; ++k) {
                const double a = std::abs(vals[k]);
                rmax[i] = std::max(rmax[i], a);
                cmax[ci[k]] = std::max(cmax[ci[k]], a);
            }
        for (std::size_t i = 0; i < n; ++i) {
            if (rmax[i] == 0.0) throw FactorizationError("factor_general: zero row " + std::to_string(i));
            if (cmax[i] == 0.0) throw FactorizationError("factor_general: zero column " + std::to_string(i));
            rmax[i] = 1.0 / std::sqrt(rmax[i]);
            cmax[i] = 1.0 / std::sqrt(cmax[i]);
            r[i] *= rmax[i];
            c[i] *= cmax[i];
        }
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t k = rp[i]; k < rp[i + 1]; ++k) vals[k] *= rmax[i] * cmax[ci[k]];
    }

    std::vector<Eigen::Triplet<double>> t;
    t.reserve(vals.size());
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = rp[i]; k < rp[i + 1]; ++k)
            t.emplace_back(static_cast<int>(i), static_cast<int>(ci[k]), vals[k]);
    Eigen::SparseMatrix<double> e(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    e.setFromTriplets(t.begin(), t.end());
    e.makeCompressed();

    auto lu = std::make_shared<GeneralFactor::Lu>();
    lu->compute(e);
    if (lu->info() != Eigen::Success) throw FactorizationError("factor_general: matrix is singular to working precision");

    f.row_scale_ = std::move(r);
    f.col_scale_ = std::move(c);
    f.lu_ = std::move(lu);
    return f;
}

}  // namespace hmfrac::linalg
