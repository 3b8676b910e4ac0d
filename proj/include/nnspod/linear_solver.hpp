#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "nnspod/errors.hpp"

namespace nnspod {

/// Compressed sparse row matrix (square).
struct CsrMatrix {
    std::size_t n = 0;
    std::vector<std::size_t> row_ptr;  // n+1
    std::vector<std::size_t> col;
    std::vector<double> val;

    void multiply(std::span<const double> x, std::span<double> y) const;
    std::vector<double> diagonal() const;
};

/// Builds a CSR matrix row by row; duplicate column entries are summed.
class CsrBuilder {
public:
    explicit CsrBuilder(std::size_t n) : n_(n), rows_(n) {}
    void add(std::size_t r, std::size_t c, double v) { rows_[r].emplace_back(c, v); }
    CsrMatrix build() const;

private:
    std::size_t n_;
    std::vector<std::vector<std::pair<std::size_t, double>>> rows_;
};

struct BicgstabOptions {
    double tol = 1e-10;          // relative residual ||b - Ax|| / ||b||
    std::size_t max_iters = 5000;
};

/// Preconditioned BiCGSTAB with diagonal (Jacobi) preconditioning. x0 is
/// used as the initial guess. Throws SolverError on non-convergence,
/// carrying the final true residual.
std::vector<double> bicgstab(const CsrMatrix& A, std::span<const double> b,
                             std::span<const double> x0, const BicgstabOptions& opts);

}  // namespace nnspod
