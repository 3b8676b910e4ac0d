#pragma once

#include <cstddef>
#include <span>
#include <utility>

#include "nnspod/errors.hpp"

namespace nnspod {

struct Point {
    double x = 0.0;
    double y = 0.0;
};

/// Uniform cell-centered 2-D grid over [x_min,x_max] x [y_min,y_max].
///
/// The linear cell index is row-major with x fastest: k = j*nx + i. All
/// operations are pure; instances are immutable after construction.
class StructuredGrid {
public:
    StructuredGrid(std::size_t nx, std::size_t ny,
                   double x_min, double x_max, double y_min, double y_max);

    std::size_t nx() const { return nx_; }
    std::size_t ny() const { return ny_; }
    std::size_t cell_count() const { return nx_ * ny_; }

    double x_min() const { return x_min_; }
    double x_max() const { return x_max_; }
    double y_min() const { return y_min_; }
    double y_max() const { return y_max_; }
    double dx() const { return dx_; }
    double dy() const { return dy_; }
    double cell_area() const { return dx_ * dy_; }
    double cell_diagonal() const;

    std::size_t linearize(std::size_t i, std::size_t j) const;
    std::pair<std::size_t, std::size_t> delinearize(std::size_t k) const;

    Point centroid(std::size_t i, std::size_t j) const;
    Point centroid(std::size_t k) const;

    /// Bilinear interpolation of a cell-centered field at an arbitrary point.
    /// Queries outside the centroid hull return 0 (zero-extension, matching
    /// the homogeneous Dirichlet fields this library works with).
    double bilinear_sample(std::span<const double> field, Point p) const;

    bool operator==(const StructuredGrid&) const = default;

private:
    std::size_t nx_, ny_;
    double x_min_, x_max_, y_min_, y_max_;
    double dx_, dy_;
};

}  // namespace nnspod
