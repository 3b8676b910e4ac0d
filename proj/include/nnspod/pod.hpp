#pragma once

#include <filesystem>
#include <vector>

#include "nnspod/dense.hpp"
#include "nnspod/errors.hpp"
#include "nnspod/snapshot.hpp"

namespace nnspod {

struct EigenResult {
    std::vector<double> values;  // descending
    DenseMatrix vectors;         // column i = eigenvector of values[i]
};

/// Cyclic Jacobi eigendecomposition of a symmetric matrix. Iterates until
/// the largest off-diagonal entry drops below 1e-12 * ||K||_F; throws
/// NumericalError if that takes more than 100 sweeps and InvalidInput if K
/// is not symmetric to 1e-12 relative.
EigenResult jacobi_eigen(const DenseMatrix& K);

struct PodResult {
    std::vector<double> singular_values;  // full spectrum, descending
    DenseMatrix modes;                    // orthonormal columns, one per retained mode
    std::vector<double> energy;           // cumulative normalized squared singular values

    std::size_t retained() const { return modes.cols; }
};

/// Method-of-snapshots POD: eigendecompose the Gram matrix X^T X, take
/// sigma_i = sqrt(lambda_i) and modes X v_i / sigma_i for every
/// sigma_i > sigma_1 * 1e-12. Modes are re-orthonormalized and sign-fixed
/// (largest-magnitude entry positive).
PodResult pod(const DenseMatrix& snapshots);
PodResult pod(const SnapshotMatrix& m);

/// Relative projection residual sqrt(sum_k ||u_k - P_R u_k||^2 / sum_k ||u_k||^2)
/// for the first r modes, computed directly and cross-checked against the
/// singular-value tail formula (the two must agree to 1e-10).
double projection_error(const DenseMatrix& snapshots, const PodResult& result, std::size_t r);
double projection_error(const SnapshotMatrix& m, const PodResult& result, std::size_t r);

/// Tail formula alone: sqrt(sum_{i>=r} sigma_i^2 / sum_i sigma_i^2).
double spectral_residual(const PodResult& result, std::size_t r);

/// Smallest r whose projection residual is <= eps; throws
/// ThresholdUnreachable (carrying the best achievable residual) if no
/// retained mode count reaches eps.
std::size_t modes_for_threshold(const PodResult& result, double eps);

void write_singular_values_csv(const std::filesystem::path& path,
                               const std::vector<double>& values);
void write_energy_csv(const std::filesystem::path& path, const std::vector<double>& energy);

}  // namespace nnspod
