#include "nnspod/shift.hpp"

#include <cmath>
#include <string>

namespace nnspod {

std::vector<double> shift_snapshot(const StructuredGrid& grid, std::span<const double> snapshot,
                                   Point b, double dt_shift) {
    if (!std::isfinite(b.x) || !std::isfinite(b.y) || !std::isfinite(dt_shift))
        throw InvalidInput("shift_snapshot: non-finite shift arguments");
    std::vector<double> out(grid.cell_count());
    const double ox = b.x * dt_shift;
    const double oy = b.y * dt_shift;
    for (std::size_t k = 0; k < out.size(); ++k) {
        const Point c = grid.centroid(k);
        out[k] = grid.bilinear_sample(snapshot, {c.x + ox, c.y + oy});
    }
    return out;
}

TraceResult integrate_characteristic(const StructuredGrid& grid, Point p, double t_from,
                                     double t_to, const AdvectionField& field,
                                     std::size_t ode_steps) {
    if (!std::isfinite(t_from) || !std::isfinite(t_to))
        throw InvalidInput("integrate_characteristic: non-finite time bounds");
    if (ode_steps < 1)
        throw InvalidInput("integrate_characteristic: ode_steps must be >= 1");

    // padded box: twice the domain extent, centered on the domain
    const double lx = grid.x_max() - grid.x_min();
    const double ly = grid.y_max() - grid.y_min();
    const double bx0 = grid.x_min() - 0.5 * lx, bx1 = grid.x_max() + 0.5 * lx;
    const double by0 = grid.y_min() - 0.5 * ly, by1 = grid.y_max() + 0.5 * ly;
    auto inside = [&](Point q) {
        return q.x >= bx0 && q.x <= bx1 && q.y >= by0 && q.y <= by1;
    };

    if (t_to == t_from) return {p, inside(p)};
    const double h = (t_to - t_from) / static_cast<double>(ode_steps);
    double t = t_from;
    for (std::size_t s = 0; s < ode_steps; ++s) {
        const Point k1 = field.at(p.x, p.y, t);
        const Point k2 = field.at(p.x + 0.5 * h * k1.x, p.y + 0.5 * h * k1.y, t + 0.5 * h);
        const Point k3 = field.at(p.x + 0.5 * h * k2.x, p.y + 0.5 * h * k2.y, t + 0.5 * h);
        const Point k4 = field.at(p.x + h * k3.x, p.y + h * k3.y, t + h);
        p.x += h / 6.0 * (k1.x + 2.0 * k2.x + 2.0 * k3.x + k4.x);
        p.y += h / 6.0 * (k1.y + 2.0 * k2.y + 2.0 * k3.y + k4.y);
        t += h;
        if (!inside(p)) return {p, false};
    }
    return {p, true};
}

SnapshotMatrix shift_all(const SnapshotMatrix& m, const ShiftSpec& spec) {
    if (spec.ode_steps < 1)
        throw InvalidInput("shift_all: ode_steps must be >= 1");
    const auto& params = m.params();
    if (spec.t_ref < params.front() || spec.t_ref > params.back())
        throw InvalidInput("shift_all: t_ref " + std::to_string(spec.t_ref) +
                           " outside snapshot time range");

    const StructuredGrid& grid = m.grid();
    DenseMatrix data(m.n_cells(), m.n_snapshots());
    for (std::size_t k = 0; k < m.n_snapshots(); ++k) {
        const auto snap = m.column(k);
        auto out = data.column(k);
        const double t_k = params[k];
        for (std::size_t cell = 0; cell < m.n_cells(); ++cell) {
            const TraceResult trace = integrate_characteristic(
                grid, grid.centroid(cell), spec.t_ref, t_k, spec.field, spec.ode_steps);
            out[cell] = trace.in_domain ? grid.bilinear_sample(snap, trace.p) : 0.0;
        }
    }
    return SnapshotMatrix(grid, std::move(data), params);
}

}  // namespace nnspod
