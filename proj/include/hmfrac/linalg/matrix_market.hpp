#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "hmfrac/linalg/sparse_matrix.hpp"

namespace hmfrac::linalg {

/// Coordinate/real/general Matrix Market output, 1-based, full precision.
inline void write_matrix_market(const SparseMatrix& m, std::ostream& os) {
    os << "%%MatrixMarket matrix coordinate real general\n";
    os << m.rows() << ' ' << m.cols() << ' ' << m.nnz() << '\n';
    char buf[64];
    m.for_each([&](std::size_t i, std::size_t j, double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        os << i + 1 << ' ' << j + 1 << ' ' << buf << '\n';
    });
}

/// Reads coordinate real matrices in general or symmetric storage.
inline SparseMatrix read_matrix_market(std::istream& is) {
    std::string line;
    int lineno = 1;
    if (!std::getline(is, line)) throw ParseError("empty Matrix Market stream", lineno);
    std::istringstream banner(line);
    std::string tag, object, format, field, symmetry;
    banner >> tag >> object >> format >> field >> symmetry;
    if (tag != "%%MatrixMarket" || object != "matrix" || format != "coordinate" || field != "real")
        throw ParseError("unsupported Matrix Market banner: " + line, lineno);
    const bool symmetric = symmetry == "symmetric";
    if (!symmetric && symmetry != "general") throw ParseError("unsupported symmetry: " + symmetry, lineno);

    do {
        if (!std::getline(is, line)) throw ParseError("missing size line", lineno);
        ++lineno;
    } while (!line.empty() && line[0] == '%');
    std::size_t rows = 0, cols = 0, nnz = 0;
    if (!(std::istringstream(line) >> rows >> cols >> nnz)) throw ParseError("malformed size line", lineno);

    std::vector<Triplet> t;
    t.reserve(symmetric ? 2 * nnz : nnz);
    for (std::size_t k = 0; k < nnz; ++k) {
        if (!std::getline(is, line)) throw ParseError("unexpected end of entries", lineno);
        ++lineno;
        std::size_t i = 0, j = 0;
        double v = 0.0;
        if (!(std::istringstream(line) >> i >> j >> v) || i == 0 || j == 0 || i > rows || j > cols)
            throw ParseError("malformed entry", lineno);
        t.push_back({i - 1, j - 1, v});
        if (symmetric && i != j) t.push_back({j - 1, i - 1, v});
    }
    return SparseMatrix::from_triplets(rows, cols, std::move(t));
}

}  // namespace hmfrac::linalg
