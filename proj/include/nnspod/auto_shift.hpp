#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "nnspod/mlp.hpp"
#include "nnspod/pod.hpp"
#include "nnspod/snapshot.hpp"

namespace nnspod {

/// Architecture and training settings for one of the two networks.
struct NetSpec {
    std::size_t hidden_layers = 2;
    std::size_t neurons = 40;
    Activation hidden_activation = Activation::sigmoid;
    Activation output_activation = Activation::sigmoid;
    double learning_rate = 1e-3;
    double eps = 1e-5;  // stop once the mean-squared-error loss drops below this
    std::size_t max_epochs = 20000;
};

struct RegridSpec {
    std::size_t k_nn = 4;
    double power = 2.0;
    double cutoff_diagonals = 2.0;  // cutoff radius in units of the cell diagonal
};

/// How the shift network's output is turned into shifted coordinates.
/// Displacement form starts training at the identity map, which keeps the
/// scattered points covering the domain; absolute form reproduces the raw
/// network output and is kept for comparison.
enum class ShiftMapForm { displacement, absolute };

/// Configuration of the automatic shift-detection pipeline. Loss
/// thresholds are in per-point mean-squared-error units, which keeps them
/// grid-independent.
struct NnspodConfig {
    std::vector<std::size_t> reference_candidates{0};
    NetSpec interp{2, 40, Activation::sigmoid, Activation::sigmoid, 1e-3, 1e-5, 20000};
    NetSpec shift{3, 20, Activation::prelu, Activation::linear, 1e-4, 1e-3, 10000};
    double eps_svd = 1e-2;        // target spectral residual at r_target modes
    std::size_t r_target = 1;
    std::uint64_t seed = 0;
    RegridSpec regrid{};
    ShiftMapForm shift_map = ShiftMapForm::displacement;
};

struct TrainedNet {
    Mlp net;                        // parameters with the lowest observed loss
    std::vector<double> loss_curve;  // one entry per epoch
    double best_loss = 0.0;
    std::size_t best_epoch = 0;
    bool reached_eps = false;
};

/// Trains a coordinate -> field-value network on the reference snapshot.
/// Inputs are centroid coordinates affinely scaled to [0,1]^2; the loss is
/// (1/N_h) sum_j (net(x_j) - u_ref_j)^2.
TrainedNet train_interp_net(const StructuredGrid& grid, std::span<const double> u_ref,
                            const NetSpec& spec, std::uint64_t seed);

/// Trains the (x, y, t) -> shifted-coordinate network through the frozen
/// interpolation network. The loss averages the squared mismatch
/// interp(shift(x_j, t_k)) vs u(x_j, t_k) over every snapshot except the
/// reference. Gradients reach the shift network only through the
/// interpolation network's input gradient; its parameters are not touched.
TrainedNet train_shift_net(const SnapshotMatrix& m, const Mlp& interp, std::size_t ref_index,
                           const NetSpec& spec, ShiftMapForm form, std::uint64_t seed);

struct RegridResult {
    SnapshotMatrix matrix;
    bool degenerate_warning = false;          // >50% of centroids unreachable in some column
    std::vector<std::size_t> degenerate_columns;
};

/// Inverse-distance-weighted value at `query` from scattered points: the
/// k_nn nearest points contribute with weights 1/d^power, an exact hit
/// (distance < 1e-12) short-circuits, and the value is 0 when even the
/// nearest point lies beyond `cutoff`. Brute force; the re-gridding path
/// uses a binned search with the same combination rule.
double idw_value(std::span<const Point> points, std::span<const double> values, Point query,
                 const RegridSpec& spec, double cutoff);

/// Evaluates the shift network on every cell of every snapshot and
/// re-grids the scattered (shifted point, value) pairs back onto the
/// centroids by inverse-distance weighting over the k_nn nearest shifted
/// points. Centroids whose nearest shifted point lies beyond the cutoff
/// radius receive 0. The reference column passes through unchanged.
RegridResult apply_shift_net(const SnapshotMatrix& m, const Mlp& shift_net,
                             std::size_t ref_index, const RegridSpec& regrid,
                             ShiftMapForm form = ShiftMapForm::displacement);

struct NnspodResult {
    Mlp interp_net;
    Mlp shift_net;
    SnapshotMatrix shifted;
    PodResult pod_before;
    PodResult pod_after;
    std::size_t chosen_reference = 0;
    std::vector<double> interp_loss_curve;
    std::vector<double> shift_loss_curve;
    double residual_at_target = 0.0;  // spectral residual of the shifted matrix at r_target
    bool converged = false;
    bool regrid_warning = false;
};

/// Full pipeline: iterate over reference candidates in order, training
/// both networks and re-gridding, until the shifted matrix meets eps_svd
/// at r_target modes. Falls back to the best candidate (lowest residual)
/// with converged = false when none does. Deterministic given the seed.
NnspodResult run_nnspod(const SnapshotMatrix& m, const NnspodConfig& cfg);

/// Writes the result bundle: interp.json, shift.json, shifted.snap,
/// sv_before.csv, sv_after.csv, loss_interp.csv, loss_shift.csv,
/// report.json.
void write_result_bundle(const NnspodResult& result, const NnspodConfig& cfg,
                         const std::filesystem::path& dir);

}  // namespace nnspod
