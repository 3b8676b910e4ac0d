#pragma once

#include "nnspod/fom_advection.hpp"
#include "nnspod/grid.hpp"
#include "nnspod/snapshot.hpp"

namespace nnspod {

/// Transport-based pre-processing of a snapshot set: every column is
/// re-sampled in the frame of reference time t_ref by following the
/// characteristics of the given field.
struct ShiftSpec {
    AdvectionField field = AdvectionField::constant(1.0, -1.0);
    double t_ref = 0.0;
    std::size_t ode_steps = 32;
};

/// Constant-velocity shift: output value at cell j is the bilinear sample
/// of the snapshot at x_j + b * dt_shift (zero outside the domain).
std::vector<double> shift_snapshot(const StructuredGrid& grid, std::span<const double> snapshot,
                                   Point b, double dt_shift);

struct TraceResult {
    Point p;
    bool in_domain;  // false once the trajectory leaves the padded domain box
};

/// Integrates dx/dt = b(x, t) from t_from to t_to with classical RK4 in
/// ode_steps uniform substeps (backward when t_to < t_from). The
/// trajectory is abandoned with in_domain = false as soon as it leaves a
/// box twice the domain size centered on the domain.
TraceResult integrate_characteristic(const StructuredGrid& grid, Point p, double t_from,
                                     double t_to, const AdvectionField& field,
                                     std::size_t ode_steps);

/// Shifts every column to the reference time: column k is sampled at the
/// characteristic foot points traced from t_ref to t_k. Parameters are
/// preserved.
SnapshotMatrix shift_all(const SnapshotMatrix& m, const ShiftSpec& spec);

}  // namespace nnspod
