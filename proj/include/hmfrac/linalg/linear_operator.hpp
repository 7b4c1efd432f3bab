#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <utility>

#include "hmfrac/linalg/sparse_matrix.hpp"

namespace hmfrac::linalg {

/// Square linear map given only through its action.
class LinearOperator {
public:
    using ApplyFn = std::function<void(std::span<const double>, std::span<double>)>;

    LinearOperator() = default;
    LinearOperator(std::size_t dim, ApplyFn fn) : dim_(dim), fn_(std::move(fn)) {}

    static LinearOperator from_matrix(SparseMatrix m) {
        if (m.rows() != m.cols()) throw DimensionError("operator from non-square matrix");
        auto held = std::make_shared<const SparseMatrix>(std::move(m));
        const auto n = held->rows();
        return {n, [held](std::span<const double> x, std::span<double> y) { held->apply(x, y); }};
    }

    std::size_t dimension() const noexcept { return dim_; }

    void apply(std::span<const double> x, std::span<double> y) const {
        if (x.size() != dim_ || y.size() != dim_) throw DimensionError("operator apply: dimension mismatch");
        fn_(x, y);
    }

    Vector operator()(std::span<const double> x) const {
        Vector y(dim_);
        apply(x, y);
        return y;
    }

private:
    std::size_t dim_ = 0;
    ApplyFn fn_;
};

}  // namespace hmfrac::linalg
