#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "nnspod/dense.hpp"
#include "nnspod/errors.hpp"
#include "nnspod/grid.hpp"

namespace nnspod {

/// Snapshot matrix: one column per snapshot, rows indexed by grid cell.
/// Parameter values (times) are strictly increasing. Immutable after
/// construction; modified copies are built with with_column().
class SnapshotMatrix {
public:
    SnapshotMatrix(StructuredGrid grid, DenseMatrix data, std::vector<double> params);

    const StructuredGrid& grid() const { return grid_; }
    const DenseMatrix& data() const { return data_; }
    const std::vector<double>& params() const { return params_; }

    std::size_t n_cells() const { return data_.rows; }
    std::size_t n_snapshots() const { return data_.cols; }

    double operator()(std::size_t cell, std::size_t snap) const { return data_(cell, snap); }
    std::span<const double> column(std::size_t snap) const { return data_.column(snap); }

    SnapshotMatrix with_column(std::size_t snap, std::span<const double> values) const;

private:
    StructuredGrid grid_;
    DenseMatrix data_;
    std::vector<double> params_;
};

/// Zero-copy transposed (feature-space) view: rows are snapshots, columns
/// are cells. The view must not outlive the matrix.
class FeatureView {
public:
    explicit FeatureView(const SnapshotMatrix& m) : m_(&m) {}
    std::size_t rows() const { return m_->n_snapshots(); }
    std::size_t cols() const { return m_->n_cells(); }
    double operator()(std::size_t snap, std::size_t cell) const { return (*m_)(cell, snap); }

private:
    const SnapshotMatrix* m_;
};

FeatureView to_features(const SnapshotMatrix& m);

/// Binary persistence. Format: magic "SNAP1", u64 nx, ny, n_snapshots,
/// f64 x_min, x_max, y_min, y_max, n_snapshots f64 params, then
/// n_cells*n_snapshots f64 values column-major. Little-endian throughout;
/// round trips are bit-exact.
void save_snapshots(const SnapshotMatrix& m, const std::filesystem::path& path);
SnapshotMatrix load_snapshots(const std::filesystem::path& path);

/// CSV ingestion of externally computed snapshot sets. Accepts either a
/// directory of per-snapshot files named snapshot_<index>_<time>.csv with
/// header x,y,value, or a single wide CSV whose header is x,y followed by
/// one time value per snapshot column. Rows are matched to centroids by
/// nearest centroid within 1/4 * min(dx,dy).
SnapshotMatrix ingest_csv(const std::filesystem::path& file_or_dir, const StructuredGrid& grid);

/// Inverse of the per-snapshot ingestion layout, used for round trips and
/// for handing data to external tools.
void export_csv_dir(const SnapshotMatrix& m, const std::filesystem::path& dir);

}  // namespace nnspod
