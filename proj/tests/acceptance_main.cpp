// Acceptance suite: runs every gate of the reduction pipeline end to end
// and prints one pass/fail line per criterion. Exit code is the number of
// failed criteria.

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include "nnspod/auto_shift.hpp"
#include "nnspod/fom_advection.hpp"
#include "nnspod/pod.hpp"
#include "nnspod/shift.hpp"
#include "nnspod/snapshot.hpp"
#include "oracles.hpp"

using namespace nnspod;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void report(int id, bool pass, const std::string& what, const std::string& detail) {
    std::printf("%s  criterion %d: %s  [%s]\n", pass ? "PASS" : "FAIL", id, what.c_str(),
                detail.c_str());
    std::fflush(stdout);
    if (!pass) ++failures;
}

std::string fmt(const char* format, ...) {
    char buf[512];
    va_list args;
    va_start(args, format);
    std::vsnprintf(buf, sizeof(buf), format, args);
    va_end(args);
    return buf;
}

double elapsed_s(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

const AdvectionField kSwirl = AdvectionField::analytic([](double x, double y, double t) {
    return Point{0.5 * y * y * t, -2.0 * x * t * t};
});

SnapshotMatrix run_linear_benchmark() {
    FomConfig cfg;
    cfg.grid = StructuredGrid(50, 50, 0.0, 1.0, 0.0, 1.0);
    cfg.field = AdvectionField::constant(1.0, -1.0);
    cfg.t_final = 1.0;
    cfg.n_steps = 100;
    cfg.ic = {{0.2, 0.8}, 0.1, 1.0};
    return simulate_advection(cfg);
}

SnapshotMatrix run_swirl_benchmark() {
    FomConfig cfg;
    cfg.grid = StructuredGrid(50, 50, 0.0, 1.0, 0.0, 1.0);
    cfg.field = kSwirl;
    cfg.t_final = 1.0;
    cfg.n_steps = 100;
    cfg.ic = {{0.2, 0.8}, 0.1, 1.0};
    return simulate_advection(cfg);
}

// ---------------------------------------------------------------------------

void criterion_1_2() {
    const auto start = std::chrono::steady_clock::now();
    const SnapshotMatrix m = run_linear_benchmark();
    const PodResult baseline = pod(m);
    const std::size_t modes = modes_for_threshold(baseline, 1e-3);
    const double t1 = elapsed_s(start);
    report(1, modes >= 11 && modes <= 17 && t1 <= 120.0,
           "constant-advection baseline needs 14 +/- 3 modes at 1e-3",
           fmt("modes=%zu, %.1f s", modes, t1));

    ShiftSpec spec{AdvectionField::constant(1.0, -1.0), 0.0, 32};
    const SnapshotMatrix shifted = shift_all(m, spec);
    const PodResult after = pod(shifted);
    const std::size_t shifted_modes = modes_for_threshold(after, 1e-3);
    const double ratio = after.singular_values[1] / after.singular_values[0];
    report(2, shifted_modes <= 5 && ratio < 5e-2,
           "manual shift to t_ref=0 collapses the linear benchmark",
           fmt("modes=%zu, sigma2/sigma1=%.2e", shifted_modes, ratio));
}

void criterion_3() {
    const auto start = std::chrono::steady_clock::now();
    const SnapshotMatrix m = run_swirl_benchmark();

    NnspodConfig cfg;
    cfg.reference_candidates = {80};
    cfg.interp = {2, 40, Activation::sigmoid, Activation::sigmoid, 1e-2, 1e-5, 20000};
    cfg.shift = {3, 20, Activation::prelu, Activation::linear, 3e-3, 5e-5, 1500};
    cfg.eps_svd = 1e-2;
    cfg.r_target = 1;
    cfg.seed = 2024;
    const NnspodResult result = run_nnspod(m, cfg);

    const std::size_t before = modes_for_threshold(result.pod_before, 1e-3);
    std::size_t after_modes = m.n_snapshots();
    try {
        after_modes = modes_for_threshold(result.pod_after, 1e-3);
    } catch (const ThresholdUnreachable&) {
    }
    const double share_before = result.pod_before.energy[0];
    const double share_after = result.pod_after.energy[0];
    const double t = elapsed_s(start);
    report(3,
           after_modes * 2 < before && share_after > share_before && t <= 1800.0,
           "automatic shift detection beats plain reduction on the swirl field",
           fmt("modes %zu -> %zu, first-mode energy %.4f -> %.4f, interp %.1e, shift %.1e, "
               "%.0f s",
               before, after_modes, share_before, share_after,
               result.interp_loss_curve.back(), result.shift_loss_curve.back(), t));
}

void criterion_4() {
    const auto start = std::chrono::steady_clock::now();
    std::vector<LayerSpec> a1(2, {40, Activation::sigmoid});
    a1.push_back({1, Activation::sigmoid});
    std::vector<LayerSpec> a2(3, {20, Activation::prelu});
    a2.push_back({2, Activation::linear});
    std::vector<LayerSpec> a3(4, {40, Activation::hard_sigmoid});
    a3.push_back({1, Activation::hard_sigmoid});
    std::vector<LayerSpec> a4(5, {25, Activation::prelu});
    a4.push_back({2, Activation::linear});

    const double e1 = oracles::max_gradient_error(make_mlp(101, 2, a1), 100, 1);
    const double e2 = oracles::max_gradient_error(make_mlp(102, 3, a2), 100, 2);
    const double e3 = oracles::max_gradient_error(make_mlp(103, 2, a3), 100, 3);
    const double e4 = oracles::max_gradient_error(make_mlp(104, 3, a4), 100, 4);
    const double worst = std::max({e1, e2, e3, e4});
    report(4, worst <= 1e-5, "reverse-mode gradients match central differences",
           fmt("max rel err %.2e over 4 architectures, %.1f s", worst,
               elapsed_s(start)));
}

void criterion_5() {
    const auto start = std::chrono::steady_clock::now();
    double worst_sv = 0.0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const DenseMatrix x = oracles::random_matrix(20, 10, seed);
        const PodResult p = pod(x);
        const auto expected = oracles::singular_values_power_iteration(x);
        for (std::size_t i = 0; i < expected.size(); ++i)
            worst_sv = std::max(worst_sv, std::abs(p.singular_values[i] - expected[i]) /
                                              expected[0]);
    }
    double worst_recon = 0.0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const DenseMatrix k = oracles::random_symmetric(10, seed);
        const EigenResult e = jacobi_eigen(k);
        double err2 = 0.0;
        for (std::size_t i = 0; i < 10; ++i)
            for (std::size_t j = 0; j < 10; ++j) {
                double v = 0.0;
                for (std::size_t l = 0; l < 10; ++l)
                    v += e.vectors(i, l) * e.values[l] * e.vectors(j, l);
                const double d = v - k(i, j);
                err2 += d * d;
            }
        worst_recon = std::max(worst_recon, std::sqrt(err2));
    }
    report(5, worst_sv <= 1e-10 && worst_recon <= 1e-10,
           "singular values match the power-iteration oracle",
           fmt("sv err %.2e, eigen reconstruction %.2e, %.1f s", worst_sv, worst_recon,
               elapsed_s(start)));
}

void criterion_6() {
    // bit-level identity at b = 0
    StructuredGrid grid50(50, 50, 0.0, 1.0, 0.0, 1.0);
    const auto u = gaussian_ic(grid50, {0.4, 0.6}, 0.12);
    const auto same = shift_snapshot(grid50, u, {0.0, 0.0}, 0.9);
    const bool identity = std::memcmp(u.data(), same.data(), u.size() * sizeof(double)) == 0;

    // analytic translated gaussians collapse to numerical rank one; the
    // finer grid keeps bilinear resampling noise well under the budget
    StructuredGrid grid(100, 100, 0.0, 1.0, 0.0, 1.0);
    std::vector<double> times(20);
    for (std::size_t k = 0; k < times.size(); ++k)
        times[k] = 0.04 * static_cast<double>(k) / static_cast<double>(times.size() - 1);
    const Point b{1.0, -1.0};
    DenseMatrix data(grid.cell_count(), times.size());
    for (std::size_t k = 0; k < times.size(); ++k) {
        const auto col =
            gaussian_ic(grid, {0.5 + b.x * times[k], 0.5 + b.y * times[k]}, 0.1);
        std::copy(col.begin(), col.end(), data.column(k).begin());
    }
    const SnapshotMatrix m(grid, std::move(data), times);
    ShiftSpec spec{AdvectionField::constant(b.x, b.y), 0.0, 32};
    const PodResult p = pod(shift_all(m, spec));
    const double ratio = p.singular_values[1] / p.singular_values[0];
    report(6, identity && ratio < 1e-3, "shift operator is exact",
           fmt("b=0 identity %s, sigma2/sigma1=%.2e", identity ? "bit-exact" : "BROKEN",
               ratio));
}

void criterion_7() {
    FomConfig cfg;
    cfg.grid = StructuredGrid(50, 50, 0.0, 1.0, 0.0, 1.0);
    cfg.field = AdvectionField::constant(1.0, -1.0);
    cfg.t_final = 0.3;
    cfg.n_steps = 30;
    cfg.ic = {{0.35, 0.65}, 0.05, 1.0};
    cfg.solver_tol = 1e-10;
    const SnapshotMatrix m = simulate_advection(cfg);

    // count drift only while the pulse support is still interior
    auto boundary_max = [&](std::span<const double> u) {
        double v = 0.0;
        for (std::size_t i = 0; i < cfg.grid.nx(); ++i)
            v = std::max({v, std::abs(u[cfg.grid.linearize(i, 0)]),
                          std::abs(u[cfg.grid.linearize(i, cfg.grid.ny() - 1)])});
        for (std::size_t j = 0; j < cfg.grid.ny(); ++j)
            v = std::max({v, std::abs(u[cfg.grid.linearize(0, j)]),
                          std::abs(u[cfg.grid.linearize(cfg.grid.nx() - 1, j)])});
        return v;
    };
    double worst = 0.0;
    std::size_t checked = 0;
    double prev = 0.0;
    for (double v : m.column(0)) prev += v;
    for (std::size_t k = 1; k < m.n_snapshots(); ++k) {
        double mass = 0.0;
        for (double v : m.column(k)) mass += v;
        if (boundary_max(m.column(k)) < 1e-8) {
            worst = std::max(worst, std::abs(mass - prev) / prev);
            ++checked;
        }
        prev = mass;
    }
    report(7, worst < 1e-8 && checked >= 10,
           "finite-volume mass drift stays below 1e-8 per step",
           fmt("max relative drift %.2e over %zu interior steps", worst, checked));
}

void criterion_8() {
    const auto start = std::chrono::steady_clock::now();
    StructuredGrid grid(40, 40, 0.0, 1.0, 0.0, 1.0);
    const SnapshotMatrix generated = generate_deforming_pulse(grid, 60);

    // exercise the external-ingestion path end to end: the reduction below
    // runs on a matrix that went through csv export + ingest
    const fs::path csv_dir = fs::temp_directory_path() / "nnspod-acceptance" / "deforming_csv";
    fs::remove_all(csv_dir);
    export_csv_dir(generated, csv_dir);
    const SnapshotMatrix m = ingest_csv(csv_dir, grid);

    NnspodConfig cfg;
    cfg.reference_candidates = {30};
    cfg.interp = {2, 40, Activation::sigmoid, Activation::sigmoid, 1e-2, 1e-4, 20000};
    cfg.shift = {3, 20, Activation::prelu, Activation::linear, 3e-3, 1e-6, 1200};
    cfg.eps_svd = 1e-2;
    cfg.r_target = 1;
    cfg.seed = 7;
    const NnspodResult result = run_nnspod(m, cfg);

    const double pod_cum3 = result.pod_before.energy[2];
    const double nnspod_cum3 = result.pod_after.energy[2];
    double energy_before = 0.0, energy_after = 0.0;
    for (double v : result.pod_before.singular_values) energy_before += v * v;
    for (double v : result.pod_after.singular_values) energy_after += v * v;
    const double t = elapsed_s(start);
    report(8,
           nnspod_cum3 >= pod_cum3 + 0.05 && !result.regrid_warning &&
               energy_after <= 1.2 * energy_before && t <= 1800.0,
           "shape-changing transport: cumulative energy at mode 3 improves by 0.05",
           fmt("cum3 %.4f -> %.4f, energy ratio %.3f, %.0f s", pod_cum3, nnspod_cum3,
               energy_after / energy_before, t));
}

void criterion_9() {
    const fs::path root = fs::temp_directory_path() / "nnspod-acceptance" / "determinism";
    fs::remove_all(root);

    // snapshot persistence round trip, bit for bit
    StructuredGrid grid(16, 12, -1.0, 2.0, 0.0, 1.0);
    DenseMatrix data(grid.cell_count(), 5);
    SplitMix64 rng(12345);
    for (double& v : data.a) v = 2.0 * rng.uniform() - 1.0;
    std::vector<double> params{0.1, 0.2, 0.3, 0.4, 0.5};
    const SnapshotMatrix m(grid, std::move(data), params);
    fs::create_directories(root);
    save_snapshots(m, root / "m.snap");
    const SnapshotMatrix r = load_snapshots(root / "m.snap");
    const bool snap_ok =
        std::memcmp(m.data().a.data(), r.data().a.data(),
                    m.data().a.size() * sizeof(double)) == 0 &&
        m.params() == r.params() && m.grid() == r.grid();

    // identical config + seed => byte-identical result bundles
    DenseMatrix d2(grid.cell_count(), 4);
    std::vector<double> t2{0.0, 0.1, 0.2, 0.3};
    for (std::size_t k = 0; k < 4; ++k) {
        const auto col = gaussian_ic(grid, {0.2 + 0.5 * t2[k], 0.5}, 0.2);
        std::copy(col.begin(), col.end(), d2.column(k).begin());
    }
    const SnapshotMatrix small(grid, std::move(d2), t2);
    NnspodConfig cfg;
    cfg.reference_candidates = {0};
    cfg.interp = {1, 10, Activation::sigmoid, Activation::sigmoid, 1e-3, 1e-9, 200};
    cfg.shift = {1, 8, Activation::prelu, Activation::linear, 1e-3, 1e-9, 120};
    cfg.seed = 99;
    write_result_bundle(run_nnspod(small, cfg), cfg, root / "a");
    write_result_bundle(run_nnspod(small, cfg), cfg, root / "b");

    bool bundles_ok = true;
    for (const auto& entry : fs::directory_iterator(root / "a")) {
        std::ifstream fa(entry.path(), std::ios::binary);
        std::ifstream fb(root / "b" / entry.path().filename(), std::ios::binary);
        std::stringstream sa, sb;
        sa << fa.rdbuf();
        sb << fb.rdbuf();
        if (sa.str() != sb.str()) {
            bundles_ok = false;
            break;
        }
    }
    report(9, snap_ok && bundles_ok, "persistence is bit-exact and runs are deterministic",
           fmt("snap round trip %s, bundles %s", snap_ok ? "ok" : "BROKEN",
               bundles_ok ? "identical" : "DIFFER"));
}

}  // namespace

int main() {
    const auto start = std::chrono::steady_clock::now();
    criterion_1_2();
    criterion_3();
    criterion_4();
    criterion_5();
    criterion_6();
    criterion_7();
    criterion_8();
    criterion_9();
    std::printf("%d criterion(s) failed; total %.0f s\n", failures, elapsed_s(start));
    return failures;
}
