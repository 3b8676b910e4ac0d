#include "nnspod/grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace nnspod {

StructuredGrid::StructuredGrid(std::size_t nx, std::size_t ny,
                               double x_min, double x_max, double y_min, double y_max)
    : nx_(nx), ny_(ny), x_min_(x_min), x_max_(x_max), y_min_(y_min), y_max_(y_max) {
    if (nx < 2 || ny < 2)
        throw InvalidInput("StructuredGrid: nx and ny must be >= 2");
    if (!(std::isfinite(x_min) && std::isfinite(x_max) &&
          std::isfinite(y_min) && std::isfinite(y_max)))
        throw InvalidInput("StructuredGrid: non-finite domain bounds");
    if (!(x_min < x_max) || !(y_min < y_max))
        throw InvalidInput("StructuredGrid: empty domain (need x_min < x_max, y_min < y_max)");
    dx_ = (x_max_ - x_min_) / static_cast<double>(nx_);
    dy_ = (y_max_ - y_min_) / static_cast<double>(ny_);
}

double StructuredGrid::cell_diagonal() const {
    return std::hypot(dx_, dy_);
}

std::size_t StructuredGrid::linearize(std::size_t i, std::size_t j) const {
    if (i >= nx_ || j >= ny_)
        throw std::out_of_range("StructuredGrid::linearize: cell index (" +
                                std::to_string(i) + "," + std::to_string(j) + ") out of range");
    return j * nx_ + i;
}

std::pair<std::size_t, std::size_t> StructuredGrid::delinearize(std::size_t k) const {
    if (k >= cell_count())
        throw std::out_of_range("StructuredGrid::delinearize: index " + std::to_string(k) +
                                " out of range");
    return {k % nx_, k / nx_};
}

Point StructuredGrid::centroid(std::size_t i, std::size_t j) const {
    if (i >= nx_ || j >= ny_)
        throw std::out_of_range("StructuredGrid::centroid: cell index out of range");
    return {x_min_ + (static_cast<double>(i) + 0.5) * dx_,
            y_min_ + (static_cast<double>(j) + 0.5) * dy_};
}

Point StructuredGrid::centroid(std::size_t k) const {
    auto [i, j] = delinearize(k);
    return centroid(i, j);
}

double StructuredGrid::bilinear_sample(std::span<const double> field, Point p) const {
    if (!std::isfinite(p.x) || !std::isfinite(p.y))
        throw InvalidInput("bilinear_sample: non-finite query point");
    if (field.size() != cell_count())
        throw InvalidInput("bilinear_sample: field length does not match grid");

    const double cx0 = x_min_ + 0.5 * dx_;
    const double cy0 = y_min_ + 0.5 * dy_;
    const double cx1 = x_max_ - 0.5 * dx_;
    const double cy1 = y_max_ - 0.5 * dy_;
    if (p.x < cx0 || p.x > cx1 || p.y < cy0 || p.y > cy1)
        return 0.0;  // zero extension outside the centroid hull

    const double gx = std::max((p.x - cx0) / dx_, 0.0);
    const double gy = std::max((p.y - cy0) / dy_, 0.0);
    const auto i0 = std::min(static_cast<std::size_t>(gx), nx_ - 2);
    const auto j0 = std::min(static_cast<std::size_t>(gy), ny_ - 2);
    double fx = gx - static_cast<double>(i0);
    double fy = gy - static_cast<double>(j0);
    // snap to the node so that queries at a centroid reproduce its value
    // exactly despite roundoff in gx/gy
    if (fx < 1e-9) fx = 0.0;
    if (fx > 1.0 - 1e-9) fx = 1.0;
    if (fy < 1e-9) fy = 0.0;
    if (fy > 1.0 - 1e-9) fy = 1.0;

    const double* f = field.data();
    const std::size_t k00 = j0 * nx_ + i0;
    const double v00 = f[k00];
    const double v10 = f[k00 + 1];
    const double v01 = f[k00 + nx_];
    const double v11 = f[k00 + nx_ + 1];
    return (1.0 - fy) * ((1.0 - fx) * v00 + fx * v10) +
           fy * ((1.0 - fx) * v01 + fx * v11);
}

}  // namespace nnspod
