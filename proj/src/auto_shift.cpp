#include "nnspod/auto_shift.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <string>

#include "nnspod/format.hpp"

namespace nnspod {

namespace {

constexpr std::size_t kChunk = 2048;

/// Affine map of physical coordinates and time onto [0,1] network inputs.
struct InputScaler {
    double x0, inv_lx, y0, inv_ly, t0, inv_lt;

    InputScaler(const StructuredGrid& grid, const std::vector<double>& params)
        : x0(grid.x_min()), inv_lx(1.0 / (grid.x_max() - grid.x_min())),
          y0(grid.y_min()), inv_ly(1.0 / (grid.y_max() - grid.y_min())),
          t0(params.front()),
          inv_lt(params.back() > params.front() ? 1.0 / (params.back() - params.front()) : 1.0) {}

    double sx(double x) const { return (x - x0) * inv_lx; }
    double sy(double y) const { return (y - y0) * inv_ly; }
    double st(double t) const { return (t - t0) * inv_lt; }
    double unscale_x(double s) const { return x0 + s / inv_lx; }
    double unscale_y(double s) const { return y0 + s / inv_ly; }
};

std::vector<LayerSpec> build_arch(const NetSpec& spec, std::size_t output_dim) {
    if (spec.hidden_layers == 0 || spec.neurons == 0)
        throw InvalidInput("NetSpec: need at least one hidden layer with neurons");
    if (!(spec.eps > 0.0))
        throw InvalidInput("NetSpec: accuracy threshold must be positive");
    if (spec.max_epochs == 0)
        throw InvalidInput("NetSpec: max_epochs must be >= 1");
    std::vector<LayerSpec> arch(spec.hidden_layers, {spec.neurons, spec.hidden_activation});
    arch.push_back({output_dim, spec.output_activation});
    return arch;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t salt) {
    SplitMix64 rng(seed ^ (0x9e3779b97f4a7c15ULL * (salt + 1)));
    return rng.next();
}

/// Shared epoch bookkeeping: loss curve, best-parameters tracking,
/// divergence detection, eps stop.
struct EpochTracker {
    explicit EpochTracker(const Mlp& net) : best_net(net) {}

    Mlp best_net;
    std::vector<double> curve;
    double best_loss = std::numeric_limits<double>::infinity();
    std::size_t best_epoch = 0;
    bool reached_eps = false;

    /// returns true when training should stop
    bool record(const Mlp& net, double loss, double eps, const char* what) {
        const std::size_t epoch = curve.size();
        curve.push_back(loss);
        if (!std::isfinite(loss))
            throw TrainingError(std::string(what) + ": loss diverged (non-finite) at epoch " +
                                    std::to_string(epoch) + "; reduce the learning rate",
                                epoch);
        if (loss < best_loss) {
            best_loss = loss;
            best_epoch = epoch;
            best_net = net;
        }
        if (loss <= eps) {
            reached_eps = true;
            return true;
        }
        return false;
    }

    TrainedNet finish() && {
        return {std::move(best_net), std::move(curve), best_loss, best_epoch, reached_eps};
    }
};

}  // namespace

TrainedNet train_interp_net(const StructuredGrid& grid, std::span<const double> u_ref,
                            const NetSpec& spec, std::uint64_t seed) {
    const std::size_t n = grid.cell_count();
    if (u_ref.size() != n)
        throw InvalidInput("train_interp_net: reference length does not match grid");

    const InputScaler scaler(grid, {0.0, 1.0});
    std::vector<double> inputs(n * 2);
    for (std::size_t cell = 0; cell < n; ++cell) {
        const Point c = grid.centroid(cell);
        inputs[2 * cell] = scaler.sx(c.x);
        inputs[2 * cell + 1] = scaler.sy(c.y);
    }

    const auto arch = build_arch(spec, 1);
    Mlp net = make_mlp(seed, 2, arch);
    AdamState state(net, spec.learning_rate);
    MlpGradients grads = MlpGradients::zeros_like(net);
    BatchWorkspace ws;
    EpochTracker tracker(net);
    std::vector<double> dy(kChunk);

    for (std::size_t epoch = 0; epoch < spec.max_epochs; ++epoch) {
        grads.reset();
        double loss = 0.0;
        for (std::size_t s0 = 0; s0 < n; s0 += kChunk) {
            const std::size_t nb = std::min(kChunk, n - s0);
            const double* y = ws.forward(net, inputs.data() + 2 * s0, nb);
            for (std::size_t s = 0; s < nb; ++s) {
                const double e = y[s] - u_ref[s0 + s];
                loss += e * e;
                dy[s] = 2.0 * e / static_cast<double>(n);
            }
            ws.backward(net, dy.data(), nb, &grads, nullptr);
        }
        loss /= static_cast<double>(n);
        if (tracker.record(net, loss, spec.eps, "train_interp_net")) break;
        adam_step(net, grads, state);
    }
    return std::move(tracker).finish();
}

TrainedNet train_shift_net(const SnapshotMatrix& m, const Mlp& interp, std::size_t ref_index,
                           const NetSpec& spec, ShiftMapForm form, std::uint64_t seed) {
    if (ref_index >= m.n_snapshots())
        throw InvalidInput("train_shift_net: reference index out of range");
    if (m.n_snapshots() < 2)
        throw InvalidInput("train_shift_net: need at least two snapshots");
    if (interp.input_dim() != 2 || interp.output_dim() != 1)
        throw InvalidInput("train_shift_net: interpolation network must map 2 -> 1");

    const std::size_t n_cells = m.n_cells();
    const std::size_t total = (m.n_snapshots() - 1) * n_cells;
    const InputScaler scaler(m.grid(), m.params());

    std::vector<double> inputs(total * 3);
    std::vector<double> targets(total);
    std::size_t row = 0;
    for (std::size_t k = 0; k < m.n_snapshots(); ++k) {
        if (k == ref_index) continue;
        const double st = scaler.st(m.params()[k]);
        const auto col = m.column(k);
        for (std::size_t cell = 0; cell < n_cells; ++cell, ++row) {
            const Point c = m.grid().centroid(cell);
            inputs[3 * row] = scaler.sx(c.x);
            inputs[3 * row + 1] = scaler.sy(c.y);
            inputs[3 * row + 2] = st;
            targets[row] = col[cell];
        }
    }

    const auto arch = build_arch(spec, 2);
    Mlp net = make_mlp(seed, 3, arch);
    AdamState state(net, spec.learning_rate);
    MlpGradients grads = MlpGradients::zeros_like(net);
    BatchWorkspace ws_shift, ws_interp;
    EpochTracker tracker(net);
    std::vector<double> dv(kChunk), dxi(kChunk * 2), mapped(kChunk * 2);

    for (std::size_t epoch = 0; epoch < spec.max_epochs; ++epoch) {
        grads.reset();
        double loss = 0.0;
        for (std::size_t s0 = 0; s0 < total; s0 += kChunk) {
            const std::size_t nb = std::min(kChunk, total - s0);
            const double* xi = ws_shift.forward(net, inputs.data() + 3 * s0, nb);
            if (form == ShiftMapForm::displacement) {
                const double* in = inputs.data() + 3 * s0;
                for (std::size_t s = 0; s < nb; ++s) {
                    mapped[2 * s] = in[3 * s] + xi[2 * s];
                    mapped[2 * s + 1] = in[3 * s + 1] + xi[2 * s + 1];
                }
                xi = mapped.data();
            }
            const double* v = ws_interp.forward(interp, xi, nb);
            for (std::size_t s = 0; s < nb; ++s) {
                const double e = v[s] - targets[s0 + s];
                loss += e * e;
                dv[s] = 2.0 * e / static_cast<double>(total);
            }
            ws_interp.backward(interp, dv.data(), nb, nullptr, dxi.data());
            ws_shift.backward(net, dxi.data(), nb, &grads, nullptr);
        }
        loss /= static_cast<double>(total);
        if (tracker.record(net, loss, spec.eps, "train_shift_net")) break;
        adam_step(net, grads, state);
    }
    return std::move(tracker).finish();
}

// ---------------------------------------------------------------------------
// Re-gridding
// ---------------------------------------------------------------------------

namespace {

/// Uniform-bin index over the padded domain for nearest-neighbor queries.
/// Points beyond the padded box land in an overflow list that is scanned
/// only when the binned search cannot settle the k nearest.
class PointBins {
public:
    PointBins(const StructuredGrid& grid, double cell_size,
              const std::vector<double>& xs, const std::vector<double>& ys)
        : cell_(cell_size),
          x0_(grid.x_min() - cell_size), y0_(grid.y_min() - cell_size) {
        nbx_ = static_cast<std::size_t>((grid.x_max() + cell_size - x0_) / cell_) + 1;
        nby_ = static_cast<std::size_t>((grid.y_max() + cell_size - y0_) / cell_) + 1;
        bins_.resize(nbx_ * nby_);
        for (std::size_t p = 0; p < xs.size(); ++p) {
            const double bx = (xs[p] - x0_) / cell_;
            const double by = (ys[p] - y0_) / cell_;
            if (bx < 0.0 || by < 0.0 || bx >= static_cast<double>(nbx_) ||
                by >= static_cast<double>(nby_)) {
                overflow_.push_back(p);
            } else {
                bins_[static_cast<std::size_t>(by) * nbx_ + static_cast<std::size_t>(bx)]
                    .push_back(p);
            }
        }
    }

    struct Neighbor {
        double dist2;
        std::size_t index;
    };

    /// k nearest points to q, sorted by distance (ascending, stable).
    void nearest(Point q, std::size_t k, const std::vector<double>& xs,
                 const std::vector<double>& ys, std::vector<Neighbor>& out) const {
        out.clear();
        auto consider = [&](std::size_t p) {
            const double ddx = xs[p] - q.x;
            const double ddy = ys[p] - q.y;
            const double d2 = ddx * ddx + ddy * ddy;
            if (out.size() < k) {
                out.push_back({d2, p});
                std::push_heap(out.begin(), out.end(), less_);
            } else if (d2 < out.front().dist2) {
                std::pop_heap(out.begin(), out.end(), less_);
                out.back() = {d2, p};
                std::push_heap(out.begin(), out.end(), less_);
            }
        };

        const auto qbx = static_cast<long>((q.x - x0_) / cell_);
        const auto qby = static_cast<long>((q.y - y0_) / cell_);
        const long max_ring = static_cast<long>(std::max(nbx_, nby_));
        for (long r = 0; r <= max_ring; ++r) {
            if (out.size() == k) {
                const double reach = static_cast<double>(r - 1) * cell_;
                if (reach >= 0.0 && out.front().dist2 <= reach * reach) break;
            }
            for (long by = qby - r; by <= qby + r; ++by) {
                if (by < 0 || by >= static_cast<long>(nby_)) continue;
                const bool edge_row = (by == qby - r || by == qby + r);
                for (long bx = qbx - r; bx <= qbx + r; ++bx) {
                    if (bx < 0 || bx >= static_cast<long>(nbx_)) continue;
                    if (!edge_row && bx != qbx - r && bx != qbx + r) continue;
                    for (std::size_t p : bins_[static_cast<std::size_t>(by) * nbx_ +
                                               static_cast<std::size_t>(bx)])
                        consider(p);
                }
            }
        }
        // points outside the padded box can still be among the k nearest
        // when the bins are sparse
        if (!overflow_.empty()) {
            const double dxe = std::min(q.x - x0_, x0_ + static_cast<double>(nbx_) * cell_ - q.x);
            const double dye = std::min(q.y - y0_, y0_ + static_cast<double>(nby_) * cell_ - q.y);
            const double d_edge = std::min(dxe, dye);
            if (out.size() < k || out.front().dist2 > d_edge * d_edge)
                for (std::size_t p : overflow_) consider(p);
        }
        std::sort_heap(out.begin(), out.end(), less_);
    }

private:
    static bool less_(const Neighbor& a, const Neighbor& b) {
        return a.dist2 < b.dist2 || (a.dist2 == b.dist2 && a.index < b.index);
    }
    double cell_, x0_, y0_;
    std::size_t nbx_ = 0, nby_ = 0;
    std::vector<std::vector<std::size_t>> bins_;
    std::vector<std::size_t> overflow_;
};

/// Shared IDW combination rule over the sorted nearest neighbors; empty
/// optional means no point within the cutoff.
std::optional<double> combine_neighbors(std::span<const PointBins::Neighbor> neighbors,
                                        std::span<const double> values, double power,
                                        double cutoff2) {
    if (neighbors.empty() || neighbors.front().dist2 > cutoff2) return std::nullopt;
    if (neighbors.front().dist2 < 1e-12 * 1e-12) return values[neighbors.front().index];
    double num = 0.0, den = 0.0;
    for (const auto& nb : neighbors) {
        const double w = 1.0 / std::pow(nb.dist2, 0.5 * power);
        num += w * values[nb.index];
        den += w;
    }
    return num / den;
}

}  // namespace

double idw_value(std::span<const Point> points, std::span<const double> values, Point query,
                 const RegridSpec& spec, double cutoff) {
    if (points.size() != values.size())
        throw InvalidInput("idw_value: points/values size mismatch");
    std::vector<PointBins::Neighbor> neighbors;
    for (std::size_t p = 0; p < points.size(); ++p) {
        const double ddx = points[p].x - query.x;
        const double ddy = points[p].y - query.y;
        neighbors.push_back({ddx * ddx + ddy * ddy, p});
    }
    std::stable_sort(neighbors.begin(), neighbors.end(),
                     [](const auto& a, const auto& b) { return a.dist2 < b.dist2; });
    if (neighbors.size() > spec.k_nn) neighbors.resize(spec.k_nn);
    return combine_neighbors(neighbors, values, spec.power, cutoff * cutoff).value_or(0.0);
}

RegridResult apply_shift_net(const SnapshotMatrix& m, const Mlp& shift_net,
                             std::size_t ref_index, const RegridSpec& regrid,
                             ShiftMapForm form) {
    if (ref_index >= m.n_snapshots())
        throw InvalidInput("apply_shift_net: reference index out of range");
    if (shift_net.input_dim() != 3 || shift_net.output_dim() != 2)
        throw InvalidInput("apply_shift_net: shift network must map 3 -> 2");
    if (regrid.k_nn == 0 || !(regrid.power > 0.0) || !(regrid.cutoff_diagonals > 0.0))
        throw InvalidInput("apply_shift_net: invalid re-gridding parameters");

    const StructuredGrid& grid = m.grid();
    const std::size_t n_cells = m.n_cells();
    const InputScaler scaler(grid, m.params());
    const double cutoff = regrid.cutoff_diagonals * grid.cell_diagonal();
    const double cutoff2 = cutoff * cutoff;

    std::vector<double> base_inputs(n_cells * 3);
    for (std::size_t cell = 0; cell < n_cells; ++cell) {
        const Point c = grid.centroid(cell);
        base_inputs[3 * cell] = scaler.sx(c.x);
        base_inputs[3 * cell + 1] = scaler.sy(c.y);
    }

    DenseMatrix out(n_cells, m.n_snapshots());
    RegridResult result{SnapshotMatrix(grid, DenseMatrix(n_cells, 1), {0.0}), false, {}};

    BatchWorkspace ws;
    std::vector<double> sx(n_cells), sy(n_cells);
    std::vector<PointBins::Neighbor> neighbors;

    for (std::size_t k = 0; k < m.n_snapshots(); ++k) {
        const auto col = m.column(k);
        auto out_col = out.column(k);
        if (k == ref_index) {
            std::copy(col.begin(), col.end(), out_col.begin());
            continue;
        }
        const double st = scaler.st(m.params()[k]);
        for (std::size_t cell = 0; cell < n_cells; ++cell)
            base_inputs[3 * cell + 2] = st;

        for (std::size_t s0 = 0; s0 < n_cells; s0 += kChunk) {
            const std::size_t nb = std::min(kChunk, n_cells - s0);
            const double* base = base_inputs.data() + 3 * s0;
            const double* xi = ws.forward(shift_net, base, nb);
            for (std::size_t s = 0; s < nb; ++s) {
                double ox = xi[2 * s], oy = xi[2 * s + 1];
                if (form == ShiftMapForm::displacement) {
                    ox += base[3 * s];
                    oy += base[3 * s + 1];
                }
                sx[s0 + s] = scaler.unscale_x(ox);
                sy[s0 + s] = scaler.unscale_y(oy);
            }
        }

        const PointBins bins(grid, cutoff, sx, sy);
        std::size_t unreachable = 0;
        for (std::size_t cell = 0; cell < n_cells; ++cell) {
            const Point c = grid.centroid(cell);
            bins.nearest(c, regrid.k_nn, sx, sy, neighbors);
            const auto value = combine_neighbors(neighbors, col, regrid.power, cutoff2);
            if (!value) ++unreachable;
            out_col[cell] = value.value_or(0.0);
        }
        if (2 * unreachable > n_cells) {
            result.degenerate_warning = true;
            result.degenerate_columns.push_back(k);
        }
    }
    result.matrix = SnapshotMatrix(grid, std::move(out), m.params());
    return result;
}

// ---------------------------------------------------------------------------
// Pipeline
// ---------------------------------------------------------------------------

NnspodResult run_nnspod(const SnapshotMatrix& m, const NnspodConfig& cfg) {
    if (cfg.reference_candidates.empty())
        throw InvalidInput("run_nnspod: empty reference candidate list");
    for (std::size_t cand : cfg.reference_candidates)
        if (cand >= m.n_snapshots())
            throw InvalidInput("run_nnspod: reference candidate " + std::to_string(cand) +
                               " out of range");
    if (!(cfg.eps_svd > 0.0) || cfg.r_target == 0)
        throw InvalidInput("run_nnspod: eps_svd must be positive and r_target >= 1");

    PodResult pod_before = pod(m);
    const std::size_t r_eval = std::min(cfg.r_target, m.n_snapshots());

    std::optional<NnspodResult> best;
    for (std::size_t ci = 0; ci < cfg.reference_candidates.size(); ++ci) {
        const std::size_t cand = cfg.reference_candidates[ci];
        TrainedNet interp = train_interp_net(m.grid(), m.column(cand), cfg.interp,
                                             derive_seed(cfg.seed, 2 * ci));
        TrainedNet shift = train_shift_net(m, interp.net, cand, cfg.shift, cfg.shift_map,
                                           derive_seed(cfg.seed, 2 * ci + 1));
        RegridResult regrid = apply_shift_net(m, shift.net, cand, cfg.regrid, cfg.shift_map);
        PodResult pod_after = pod(regrid.matrix);
        const double residual = spectral_residual(pod_after, r_eval);

        // a transformation that leaves most centroids unreachable gives a
        // vacuously small residual; never accept it as converged
        const bool usable = !regrid.degenerate_warning;
        NnspodResult result{std::move(interp.net),
                            std::move(shift.net),
                            std::move(regrid.matrix),
                            pod_before,
                            std::move(pod_after),
                            cand,
                            std::move(interp.loss_curve),
                            std::move(shift.loss_curve),
                            residual,
                            usable && residual <= cfg.eps_svd,
                            regrid.degenerate_warning};

        if (result.converged) return result;
        const bool better = !best ||
                            (usable && best->regrid_warning) ||
                            (usable == !best->regrid_warning &&
                             residual < best->residual_at_target);
        if (better) best = std::move(result);
    }
    return std::move(*best);
}

// ---------------------------------------------------------------------------
// Result bundle
// ---------------------------------------------------------------------------

namespace {

void write_loss_csv(const std::filesystem::path& path, const std::vector<double>& curve) {
    std::ofstream os(path);
    if (!os)
        throw FormatError("cannot open '" + path.string() + "' for writing");
    os << "epoch,loss\n";
    for (std::size_t i = 0; i < curve.size(); ++i)
        os << i << ',' << g17(curve[i]) << '\n';
}

void append_modes_at(std::string& json, const PodResult& result) {
    const double thresholds[3] = {1e-1, 1e-2, 1e-3};
    json += '{';
    for (int i = 0; i < 3; ++i) {
        if (i) json += ", ";
        json += '"' + threshold_key(thresholds[i]) + "\": ";
        try {
            json += std::to_string(modes_for_threshold(result, thresholds[i]));
        } catch (const ThresholdUnreachable&) {
            json += "null";
        }
    }
    json += '}';
}

}  // namespace

void write_result_bundle(const NnspodResult& result, const NnspodConfig& cfg,
                         const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    save_mlp(result.interp_net, dir / "interp.json");
    save_mlp(result.shift_net, dir / "shift.json");
    save_snapshots(result.shifted, dir / "shifted.snap");
    write_singular_values_csv(dir / "sv_before.csv", result.pod_before.singular_values);
    write_singular_values_csv(dir / "sv_after.csv", result.pod_after.singular_values);
    write_loss_csv(dir / "loss_interp.csv", result.interp_loss_curve);
    write_loss_csv(dir / "loss_shift.csv", result.shift_loss_curve);

    std::string json = "{\n";
    json += "  \"chosen_reference\": " + std::to_string(result.chosen_reference) + ",\n";
    json += "  \"converged\": " + std::string(result.converged ? "true" : "false") + ",\n";
    json += "  \"r_target\": " + std::to_string(cfg.r_target) + ",\n";
    json += "  \"eps_svd\": " + g17(cfg.eps_svd) + ",\n";
    json += "  \"residual_at_target\": " + g17(result.residual_at_target) + ",\n";
    json += "  \"eps_interp\": " + g17(cfg.interp.eps) + ",\n";
    json += "  \"eps_shift\": " + g17(cfg.shift.eps) + ",\n";
    json += "  \"interp_final_loss\": " +
            g17(result.interp_loss_curve.empty() ? 0.0 : result.interp_loss_curve.back()) + ",\n";
    json += "  \"shift_final_loss\": " +
            g17(result.shift_loss_curve.empty() ? 0.0 : result.shift_loss_curve.back()) + ",\n";
    json += "  \"regrid_warning\": " + std::string(result.regrid_warning ? "true" : "false") +
            ",\n";
    json += "  \"modes_at_before\": ";
    append_modes_at(json, result.pod_before);
    json += ",\n  \"modes_at_after\": ";
    append_modes_at(json, result.pod_after);
    json += "\n}\n";

    std::ofstream os(dir / "report.json");
    if (!os)
        throw FormatError("cannot open '" + (dir / "report.json").string() + "' for writing");
    os << json;
}

}  // namespace nnspod
