#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "hmfrac/error.hpp"

namespace hmfrac::linalg {

using Vector = std::vector<double>;

struct Triplet {
    std::size_t row;
    std::size_t col;
    double value;
};

/// Compressed-row sparse matrix. Column indices are strictly increasing in
/// every row; explicitly stored zeros are allowed.
class SparseMatrix {
public:
    SparseMatrix() : row_ptr_(1, 0) {}

    SparseMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), row_ptr_(rows + 1, 0) {}

    /// Duplicate (row, col) entries are summed.
    static SparseMatrix from_triplets(std::size_t rows, std::size_t cols, std::vector<Triplet> triplets) {
        for (const auto& t : triplets) {
            if (t.row >= rows || t.col >= cols) {
                throw DimensionError("triplet (" + std::to_string(t.row) + ", " + std::to_string(t.col) +
                                     ") outside " + std::to_string(rows) + "x" + std::to_string(cols));
            }
        }
        std::stable_sort(triplets.begin(), triplets.end(), [](const Triplet& a, const Triplet& b) {
            return a.row != b.row ? a.row < b.row : a.col < b.col;
        });
        SparseMatrix m(rows, cols);
        m.col_idx_.reserve(triplets.size());
        m.values_.reserve(triplets.size());
        for (std::size_t k = 0; k < triplets.size();) {
            const auto r = triplets[k].row;
            const auto c = triplets[k].col;
            double sum = 0.0;
            while (k < triplets.size() && triplets[k].row == r && triplets[k].col == c) {
                sum += triplets[k].value;
                ++k;
            }
            m.col_idx_.push_back(c);
            m.values_.push_back(sum);
            ++m.row_ptr_[r + 1];
        }
        for (std::size_t r = 0; r < rows; ++r) m.row_ptr_[r + 1] += m.row_ptr_[r];
        return m;
    }

    static SparseMatrix identity(std::size_t n) {
        std::vector<Triplet> t;
        t.reserve(n);
        for (std::size_t i = 0; i < n; ++i) t.push_back({i, i, 1.0});
        return from_triplets(n, n, std::move(t));
    }

    /// Row-major dense input; zeros are dropped.
    static SparseMatrix from_dense(std::size_t rows, std::size_t cols, std::span<const double> values) {
        if (values.size() != rows * cols) throw DimensionError("dense buffer size does not match shape");
        std::vector<Triplet> t;
        for (std::size_t i = 0; i < rows; ++i)
            for (std::size_t j = 0; j < cols; ++j)
                if (values[i * cols + j] != 0.0) t.push_back({i, j, values[i * cols + j]});
        return from_triplets(rows, cols, std::move(t));
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t nnz() const noexcept { return values_.size(); }

    std::span<const std::size_t> row_ptr() const noexcept { return row_ptr_; }
    std::span<const std::size_t> col_idx() const noexcept { return col_idx_; }
    std::span<const double> values() const noexcept { return values_; }

    double coeff(std::size_t i, std::size_t j) const {
        if (i >= rows_ || j >= cols_) throw DimensionError("coeff index out of range");
        const auto first = col_idx_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[i]);
        const auto last = col_idx_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[i + 1]);
        const auto it = std::lower_bound(first, last, j);
        if (it == last || *it != j) return 0.0;
        return values_[static_cast<std::size_t>(it - col_idx_.begin())];
    }

    /// y = M x
    void apply(std::span<const double> x, std::span<double> y) const {
        if (x.size() != cols_ || y.size() != rows_) throw DimensionError("multiply: dimension mismatch");
        for (std::size_t i = 0; i < rows_; ++i) {
            double s = 0.0;
            for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) s += values_[k] * x[col_idx_[k]];
            y[i] = s;
        }
    }

    /// y = Mᵀ x
    void apply_transpose(std::span<const double> x, std::span<double> y) const {
        if (x.size() != rows_ || y.size() != cols_) throw DimensionError("multiply_transpose: dimension mismatch");
        std::fill(y.begin(), y.end(), 0.0);
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) y[col_idx_[k]] += values_[k] * x[i];
    }

    SparseMatrix transpose() const {
        std::vector<Triplet> t;
        t.reserve(nnz());
        for_each([&](std::size_t i, std::size_t j, double v) { t.push_back({j, i, v}); });
        return from_triplets(cols_, rows_, std::move(t));
    }

    /// Invokes f(row, col, value) over stored entries in row-major order.
    template <class F>
    void for_each(F&& f) const {
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) f(i, col_idx_[k], values_[k]);
    }

    double max_abs() const {
        double m = 0.0;
        for (double v : values_) m = std::max(m, std::abs(v));
        return m;
    }

    /// Symmetry on the stored pattern, relative to the largest entry.
    bool is_symmetric(double rel_tol = 1e-12) const {
        if (rows_ != cols_) return false;
        const double tol = rel_tol * max_abs();
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k)
                if (std::abs(values_[k] - coeff(col_idx_[k], i)) > tol) return false;
        return true;
    }

    Vector diagonal() const {
        Vector d(std::min(rows_, cols_), 0.0);
        for (std::size_t i = 0; i < d.size(); ++i) d[i] = coeff(i, i);
        return d;
    }

    /// Rows `row_sel` and columns `col_sel` (old indices, in new order).
    SparseMatrix select(std::span<const std::size_t> row_sel, std::span<const std::size_t> col_sel) const {
        constexpr auto npos = static_cast<std::size_t>(-1);
        std::vector<std::size_t> col_map(cols_, npos);
        for (std::size_t j = 0; j < col_sel.size(); ++j) col_map.at(col_sel[j]) = j;
        std::vector<Triplet> t;
        for (std::size_t ni = 0; ni < row_sel.size(); ++ni) {
            const auto i = row_sel[ni];
            if (i >= rows_) throw DimensionError("select: row out of range");
            for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k)
                if (col_map[col_idx_[k]] != npos) t.push_back({ni, col_map[col_idx_[k]], values_[k]});
        }
        return from_triplets(row_sel.size(), col_sel.size(), std::move(t));
    }

    SparseMatrix scaled(double s) const {
        SparseMatrix m = *this;
        for (auto& v : m.values_) v *= s;
        return m;
    }

    std::vector<double> to_dense() const {
        std::vector<double> d(rows_ * cols_, 0.0);
        for_each([&](std::size_t i, std::size_t j, double v) { d[i * cols_ + j] += v; });
        return d;
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<std::size_t> row_ptr_;
    std::vector<std::size_t> col_idx_;
    std::vector<double> values_;
};

inline Vector multiply(const SparseMatrix& m, std::span<const double> x) {
    Vector y(m.rows());
    m.apply(x, y);
    return y;
}

inline Vector multiply_transpose(const SparseMatrix& m, std::span<const double> x) {
    Vector y(m.cols());
    m.apply_transpose(x, y);
    return y;
}

/// a·A + b·B with matching shapes.
inline SparseMatrix add(const SparseMatrix& a, const SparseMatrix& b, double sa = 1.0, double sb = 1.0) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) throw DimensionError("add: shape mismatch");
    std::vector<Triplet> t;
    t.reserve(a.nnz() + b.nnz());
    a.for_each([&](std::size_t i, std::size_t j, double v) { t.push_back({i, j, sa * v}); });
    b.for_each([&](std::size_t i, std::size_t j, double v) { t.push_back({i, j, sb * v}); });
    return SparseMatrix::from_triplets(a.rows(), a.cols(), std::move(t));
}

// Small dense-vector helpers shared by the solvers.

inline double dot(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw DimensionError("dot: length mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

inline double norm_inf(std::span<const double> a) {
    double m = 0.0;
    for (double v : a) m = std::max(m, std::abs(v));
    return m;
}

/// y += s·x
inline void axpy(double s, std::span<const double> x, std::span<double> y) {
    if (x.size() != y.size()) throw DimensionError("axpy: length mismatch");
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += s * x[i];
}

inline Vector subtract(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw DimensionError("subtract: length mismatch");
    Vector r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
    return r;
}

}  // namespace hmfrac::linalg
