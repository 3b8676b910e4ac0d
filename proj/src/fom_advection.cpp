#include "nnspod/fom_advection.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace nnspod {

AdvectionField AdvectionField::constant(double fx, double fy) {
    if (!std::isfinite(fx) || !std::isfinite(fy))
        throw InvalidInput("AdvectionField: non-finite constant velocity");
    AdvectionField f;
    f.constant_ = true;
    f.velocity_ = {fx, fy};
    return f;
}

AdvectionField AdvectionField::analytic(Evaluator eval) {
    if (!eval)
        throw InvalidInput("AdvectionField: empty evaluator");
    AdvectionField f;
    f.constant_ = false;
    f.eval_ = std::move(eval);
    return f;
}

Point AdvectionField::constant_velocity() const {
    if (!constant_)
        throw InvalidInput("AdvectionField: not a constant field");
    return velocity_;
}

Point AdvectionField::at(double x, double y, double t) const {
    if (constant_) return velocity_;
    const Point v = eval_(x, y, t);
    if (!std::isfinite(v.x) || !std::isfinite(v.y))
        throw InvalidInput("AdvectionField: evaluator returned non-finite velocity");
    return v;
}

std::vector<double> gaussian_ic(const StructuredGrid& grid, Point center, double sigma,
                                double amplitude) {
    if (!(sigma > 0.0) || !std::isfinite(sigma))
        throw InvalidInput("gaussian_ic: sigma must be positive");
    std::vector<double> u(grid.cell_count());
    const double inv2s2 = 1.0 / (2.0 * sigma * sigma);
    for (std::size_t k = 0; k < u.size(); ++k) {
        const Point c = grid.centroid(k);
        const double ddx = c.x - center.x;
        const double ddy = c.y - center.y;
        const double v = amplitude * std::exp(-(ddx * ddx + ddy * ddy) * inv2s2);
        u[k] = (std::abs(v) < 1e-14) ? 0.0 : v;
    }
    return u;
}

namespace {

// QUICK face value: 6/8 donor + 3/8 downwind-adjacent - 1/8 far-upwind.
struct FaceStencil {
    std::size_t cells[3];
    double coeff[3];
    int count;
};

FaceStencil quick_stencil(std::size_t donor, std::size_t other, std::size_t far_upwind,
                          bool far_exists) {
    FaceStencil s{};
    if (far_exists) {
        s.cells[0] = donor;
        s.cells[1] = other;
        s.cells[2] = far_upwind;
        s.coeff[0] = 6.0 / 8.0;
        s.coeff[1] = 3.0 / 8.0;
        s.coeff[2] = -1.0 / 8.0;
        s.count = 3;
    } else {
        s.cells[0] = donor;
        s.coeff[0] = 1.0;
        s.count = 1;
    }
    return s;
}

}  // namespace

CsrMatrix assemble_advection_operator(const StructuredGrid& grid, const AdvectionField& field,
                                      double t) {
    const std::size_t nx = grid.nx(), ny = grid.ny();
    CsrBuilder builder(grid.cell_count());
    const double inv_dx = 1.0 / grid.dx();
    const double inv_dy = 1.0 / grid.dy();

    auto lin = [nx](std::size_t i, std::size_t j) { return j * nx + i; };

    // x-faces: f = 0..nx at fixed j; face area dy, volume dx*dy
    for (std::size_t j = 0; j < ny; ++j) {
        const double fy = grid.y_min() + (static_cast<double>(j) + 0.5) * grid.dy();
        for (std::size_t f = 0; f <= nx; ++f) {
            const double fx = grid.x_min() + static_cast<double>(f) * grid.dx();
            const double vx = field.at(fx, fy, t).x;
            if (vx == 0.0) continue;
            if (f == 0) {
                if (vx < 0.0)  // outflow through the west boundary
                    builder.add(lin(0, j), lin(0, j), -vx * inv_dx);
                continue;  // inflow carries the Dirichlet value 0
            }
            if (f == nx) {
                if (vx > 0.0)
                    builder.add(lin(nx - 1, j), lin(nx - 1, j), vx * inv_dx);
                continue;
            }
            const std::size_t w = lin(f - 1, j), e = lin(f, j);
            const FaceStencil s = (vx >= 0.0)
                ? quick_stencil(w, e, (f >= 2) ? lin(f - 2, j) : 0, f >= 2)
                : quick_stencil(e, w, (f + 1 < nx) ? lin(f + 1, j) : 0, f + 1 < nx);
            for (int c = 0; c < s.count; ++c) {
                builder.add(w, s.cells[c], vx * inv_dx * s.coeff[c]);   // outflow from w
                builder.add(e, s.cells[c], -vx * inv_dx * s.coeff[c]);  // inflow into e
            }
        }
    }

    // y-faces: f = 0..ny at fixed i; face area dx
    for (std::size_t i = 0; i < nx; ++i) {
        const double fx = grid.x_min() + (static_cast<double>(i) + 0.5) * grid.dx();
        for (std::size_t f = 0; f <= ny; ++f) {
            const double fy = grid.y_min() + static_cast<double>(f) * grid.dy();
            const double vy = field.at(fx, fy, t).y;
            if (vy == 0.0) continue;
            if (f == 0) {
                if (vy < 0.0)
                    builder.add(lin(i, 0), lin(i, 0), -vy * inv_dy);
                continue;
            }
            if (f == ny) {
                if (vy > 0.0)
                    builder.add(lin(i, ny - 1), lin(i, ny - 1), vy * inv_dy);
                continue;
            }
            const std::size_t s_cell = lin(i, f - 1), n_cell = lin(i, f);
            const FaceStencil s = (vy >= 0.0)
                ? quick_stencil(s_cell, n_cell, (f >= 2) ? lin(i, f - 2) : 0, f >= 2)
                : quick_stencil(n_cell, s_cell, (f + 1 < ny) ? lin(i, f + 1) : 0, f + 1 < ny);
            for (int c = 0; c < s.count; ++c) {
                builder.add(s_cell, s.cells[c], vy * inv_dy * s.coeff[c]);
                builder.add(n_cell, s.cells[c], -vy * inv_dy * s.coeff[c]);
            }
        }
    }
    return builder.build();
}

double cfl_number(const FomConfig& cfg) {
    const double dt = cfg.t_final / static_cast<double>(cfg.n_steps);
    double cfl = 0.0;
    for (double t : {0.0, 0.5 * cfg.t_final, cfg.t_final}) {
        for (std::size_t k = 0; k < cfg.grid.cell_count(); ++k) {
            const Point c = cfg.grid.centroid(k);
            const Point v = cfg.field.at(c.x, c.y, t);
            cfl = std::max(cfl, std::abs(v.x) * dt / cfg.grid.dx() +
                                std::abs(v.y) * dt / cfg.grid.dy());
        }
        if (cfg.field.is_constant()) break;
    }
    return cfl;
}

namespace {

CsrMatrix implicit_euler_matrix(const CsrMatrix& A, double dt) {
    CsrBuilder builder(A.n);
    for (std::size_t r = 0; r < A.n; ++r) {
        builder.add(r, r, 1.0);
        for (std::size_t idx = A.row_ptr[r]; idx < A.row_ptr[r + 1]; ++idx)
            builder.add(r, A.col[idx], dt * A.val[idx]);
    }
    return builder.build();
}

}  // namespace

SnapshotMatrix simulate_advection(const FomConfig& cfg) {
    if (cfg.n_steps < 1)
        throw InvalidInput("simulate_advection: n_steps must be >= 1");
    if (!(cfg.t_final > 0.0))
        throw InvalidInput("simulate_advection: t_final must be positive");
    if (!(cfg.solver_tol > 0.0))
        throw InvalidInput("simulate_advection: solver_tol must be positive");

    const double dt = cfg.t_final / static_cast<double>(cfg.n_steps);
    std::vector<double> u = gaussian_ic(cfg.grid, cfg.ic.center, cfg.ic.sigma, cfg.ic.amplitude);

    const std::size_t n_cols = cfg.n_steps;
    DenseMatrix data(cfg.grid.cell_count(), n_cols);
    std::vector<double> params(n_cols);

    std::size_t next_col = 0;
    if (cfg.include_ic) {
        std::copy(u.begin(), u.end(), data.column(0).begin());
        params[0] = 0.0;
        next_col = 1;
    }

    const BicgstabOptions solver_opts{cfg.solver_tol, cfg.solver_max_iters};
    CsrMatrix system;
    if (cfg.field.is_constant())
        system = implicit_euler_matrix(assemble_advection_operator(cfg.grid, cfg.field, 0.0), dt);

    const std::size_t last_step = cfg.include_ic ? cfg.n_steps - 1 : cfg.n_steps;
    for (std::size_t step = 1; step <= last_step; ++step) {
        const double t_k = static_cast<double>(step) * dt;
        if (!cfg.field.is_constant())
            system = implicit_euler_matrix(assemble_advection_operator(cfg.grid, cfg.field, t_k), dt);
        u = bicgstab(system, u, u, solver_opts);
        std::copy(u.begin(), u.end(), data.column(next_col).begin());
        params[next_col] = t_k;
        ++next_col;
    }
    return SnapshotMatrix(cfg.grid, std::move(data), std::move(params));
}

double deforming_pulse_value(double x, double y, double t) {
    const double cx = 0.2 + 0.5 * t;
    const double cy = 0.5;
    const double sx = 0.05 * (1.0 + t);
    const double sy = 0.05 / (1.0 + t);
    const double ex = (x - cx) / sx;
    const double ey = (y - cy) / sy;
    return std::exp(-0.5 * (ex * ex + ey * ey));
}

SnapshotMatrix generate_deforming_pulse(const StructuredGrid& grid, std::size_t n_steps) {
    if (n_steps < 2)
        throw InvalidInput("generate_deforming_pulse: n_steps must be >= 2");
    DenseMatrix data(grid.cell_count(), n_steps);
    std::vector<double> params(n_steps);
    for (std::size_t k = 0; k < n_steps; ++k) {
        const double t = static_cast<double>(k) / static_cast<double>(n_steps - 1);
        params[k] = t;
        auto col = data.column(k);
        for (std::size_t cell = 0; cell < grid.cell_count(); ++cell) {
            const Point c = grid.centroid(cell);
            col[cell] = deforming_pulse_value(c.x, c.y, t);
        }
    }
    return SnapshotMatrix(grid, std::move(data), std::move(params));
}

}  // namespace nnspod
