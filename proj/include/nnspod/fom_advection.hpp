#pragma once

#include <functional>

#include "nnspod/grid.hpp"
#include "nnspod/linear_solver.hpp"
#include "nnspod/snapshot.hpp"

namespace nnspod {

/// Advection velocity, either uniform-constant or an analytic evaluator
/// b(x, y, t).
class AdvectionField {
public:
    using Evaluator = std::function<Point(double x, double y, double t)>;

    static AdvectionField constant(double fx, double fy);
    static AdvectionField analytic(Evaluator eval);

    bool is_constant() const { return constant_; }
    Point constant_velocity() const;
    Point at(double x, double y, double t) const;

private:
    AdvectionField() = default;
    bool constant_ = false;
    Point velocity_{};
    Evaluator eval_;
};

struct GaussianIc {
    Point center{0.2, 0.8};
    double sigma = 0.1;
    double amplitude = 1.0;
};

struct FomConfig {
    StructuredGrid grid{50, 50, 0.0, 1.0, 0.0, 1.0};
    AdvectionField field = AdvectionField::constant(1.0, -1.0);
    double t_final = 1.0;
    std::size_t n_steps = 100;
    GaussianIc ic{};
    bool include_ic = true;   // store the IC as the first snapshot column
    double solver_tol = 1e-10;
    std::size_t solver_max_iters = 5000;
};

/// Gaussian pulse sampled at centroids; values below 1e-14 are truncated
/// to zero so the field has bounded support.
std::vector<double> gaussian_ic(const StructuredGrid& grid, Point center, double sigma,
                                double amplitude = 1.0);

/// Finite-volume divergence operator A for du/dt + A u = 0 with QUICK
/// face interpolation. Face velocities are evaluated at face midpoints at
/// time t. Faces whose far-upwind cell would lie outside the domain fall
/// back to first-order upwind; domain-boundary faces take the Dirichlet
/// value 0 on inflow and the first-order upwind interior value on outflow.
CsrMatrix assemble_advection_operator(const StructuredGrid& grid, const AdvectionField& field,
                                      double t);

/// Advisory Courant number max(|vx| dt/dx + |vy| dt/dy) over centroids,
/// sampled at the initial, middle and final times.
double cfl_number(const FomConfig& cfg);

/// Implicit-Euler time stepping of the scalar advection equation:
/// (I + dt A(t_k)) u^k = u^{k-1}, solved with BiCGSTAB per step.
SnapshotMatrix simulate_advection(const FomConfig& cfg);

/// Analytic value of the deforming-pulse generator at (x, y, t):
/// an anisotropic Gaussian with center (0.2+0.5t, 0.5) and widths
/// sigma_x = 0.05(1+t), sigma_y = 0.05/(1+t). Peak value is 1.
double deforming_pulse_value(double x, double y, double t);

/// Solver-free snapshot set of the deforming pulse sampled at n_steps
/// uniformly spaced times in [0, 1].
SnapshotMatrix generate_deforming_pulse(const StructuredGrid& grid, std::size_t n_steps);

}  // namespace nnspod
