#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace nnspod {

/// Column-major dense matrix of doubles. Columns are contiguous, which
/// matches the snapshot layout (one snapshot per column).
struct DenseMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> a;

    DenseMatrix() = default;
    DenseMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), a(r * c, 0.0) {}

    double& operator()(std::size_t r, std::size_t c) { return a[c * rows + r]; }
    double operator()(std::size_t r, std::size_t c) const { return a[c * rows + r]; }

    std::span<double> column(std::size_t c) { return {a.data() + c * rows, rows}; }
    std::span<const double> column(std::size_t c) const { return {a.data() + c * rows, rows}; }

    bool operator==(const DenseMatrix&) const = default;
};

DenseMatrix transpose(const DenseMatrix& m);

double frobenius_norm(const DenseMatrix& m);

}  // namespace nnspod
