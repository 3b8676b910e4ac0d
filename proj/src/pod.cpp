#include "nnspod/pod.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <string>

namespace nnspod {

EigenResult jacobi_eigen(const DenseMatrix& K) {
    if (K.rows != K.cols)
        throw InvalidInput("jacobi_eigen: matrix must be square");
    const std::size_t n = K.rows;

    double max_abs = 0.0, max_asym = 0.0;
    for (std::size_t c = 0; c < n; ++c)
        for (std::size_t r = 0; r < n; ++r) {
            max_abs = std::max(max_abs, std::abs(K(r, c)));
            max_asym = std::max(max_asym, std::abs(K(r, c) - K(c, r)));
        }
    if (max_asym > 1e-12 * std::max(max_abs, 1e-300))
        throw InvalidInput("jacobi_eigen: matrix is not symmetric (asymmetry " +
                           std::to_string(max_asym) + ")");

    DenseMatrix a(n, n);
    for (std::size_t c = 0; c < n; ++c)
        for (std::size_t r = 0; r < n; ++r)
            a(r, c) = 0.5 * (K(r, c) + K(c, r));
    DenseMatrix v(n, n);
    for (std::size_t i = 0; i < n; ++i) v(i, i) = 1.0;

    const double tol = 1e-12 * frobenius_norm(K);
    bool converged = false;
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p + 1 < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q)
                off = std::max(off, std::abs(a(p, q)));
        if (off <= tol) {
            converged = true;
            break;
        }
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (apq == 0.0) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double sign = (theta >= 0.0) ? 1.0 : -1.0;
                const double t = sign / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                const double tau = s / (1.0 + c);

                const double app = a(p, p), aqq = a(q, q);
                a(p, p) = app - t * apq;
                a(q, q) = aqq + t * apq;
                a(p, q) = 0.0;
                a(q, p) = 0.0;
                for (std::size_t r = 0; r < n; ++r) {
                    if (r != p && r != q) {
                        const double arp = a(r, p), arq = a(r, q);
                        a(r, p) = arp - s * (arq + tau * arp);
                        a(p, r) = a(r, p);
                        a(r, q) = arq + s * (arp - tau * arq);
                        a(q, r) = a(r, q);
                    }
                    const double vrp = v(r, p), vrq = v(r, q);
                    v(r, p) = vrp - s * (vrq + tau * vrp);
                    v(r, q) = vrq + s * (vrp - tau * vrq);
                }
            }
        }
    }
    if (!converged)
        throw NumericalError("jacobi_eigen: no convergence after 100 sweeps");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t i, std::size_t j) { return a(i, i) > a(j, j); });

    EigenResult result;
    result.values.resize(n);
    result.vectors = DenseMatrix(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        result.values[i] = a(order[i], order[i]);
        for (std::size_t r = 0; r < n; ++r)
            result.vectors(r, i) = v(r, order[i]);
    }
    return result;
}

namespace {

DenseMatrix gram_matrix(const DenseMatrix& x) {
    DenseMatrix k(x.cols, x.cols);
    for (std::size_t i = 0; i < x.cols; ++i) {
        const auto ci = x.column(i);
        for (std::size_t j = i; j < x.cols; ++j) {
            const auto cj = x.column(j);
            double s = 0.0;
            for (std::size_t r = 0; r < x.rows; ++r) s += ci[r] * cj[r];
            k(i, j) = s;
            k(j, i) = s;
        }
    }
    return k;
}

void fix_mode_sign(std::span<double> mode) {
    std::size_t arg = 0;
    double best = 0.0;
    for (std::size_t r = 0; r < mode.size(); ++r) {
        const double m = std::abs(mode[r]);
        if (m > best) {
            best = m;
            arg = r;
        }
    }
    if (mode[arg] < 0.0)
        for (double& v : mode) v = -v;
}

}  // namespace

PodResult pod(const DenseMatrix& snapshots) {
    if (snapshots.cols == 0 || snapshots.rows == 0)
        throw InvalidInput("pod: empty snapshot matrix");
    if (frobenius_norm(snapshots) == 0.0)
        throw InvalidInput("pod: degenerate all-zero snapshot matrix");

    const EigenResult eig = jacobi_eigen(gram_matrix(snapshots));
    const std::size_t ns = snapshots.cols;

    PodResult result;
    result.singular_values.resize(ns);
    // Gram eigenvalues below lambda_1 * 1e-15 are indistinguishable from
    // zero at double precision (Jacobi roundoff alone reaches that level);
    // treat them as exact zeros so rank-deficient inputs report clean ranks.
    const double noise_floor = eig.values[0] * 1e-15;
    for (std::size_t i = 0; i < ns; ++i) {
        const double lambda = (eig.values[i] > noise_floor) ? eig.values[i] : 0.0;
        result.singular_values[i] = std::sqrt(lambda);
    }

    const double cutoff = result.singular_values[0] * 1e-12;
    std::size_t retained = 0;
    while (retained < ns && result.singular_values[retained] > cutoff) ++retained;

    result.modes = DenseMatrix(snapshots.rows, retained);
    for (std::size_t i = 0; i < retained; ++i) {
        auto mode = result.modes.column(i);
        const double inv_sigma = 1.0 / result.singular_values[i];
        for (std::size_t k = 0; k < ns; ++k) {
            const double w = eig.vectors(k, i) * inv_sigma;
            const auto snap = snapshots.column(k);
            for (std::size_t r = 0; r < snapshots.rows; ++r)
                mode[r] += w * snap[r];
        }
    }

    // Modified Gram-Schmidt pass: the Gram route loses orthogonality for
    // singular values far below sigma_1.
    for (std::size_t i = 0; i < retained; ++i) {
        auto mi = result.modes.column(i);
        for (std::size_t j = 0; j < i; ++j) {
            const auto mj = result.modes.column(j);
            double proj = 0.0;
            for (std::size_t r = 0; r < mi.size(); ++r) proj += mi[r] * mj[r];
            for (std::size_t r = 0; r < mi.size(); ++r) mi[r] -= proj * mj[r];
        }
        double norm = 0.0;
        for (double v : mi) norm += v * v;
        norm = std::sqrt(norm);
        if (norm == 0.0)
            throw NumericalError("pod: retained mode collapsed during re-orthonormalization");
        for (double& v : mi) v /= norm;
        fix_mode_sign(mi);
    }

    result.energy.resize(ns);
    double cum = 0.0;
    for (std::size_t i = 0; i < ns; ++i) {
        cum += result.singular_values[i] * result.singular_values[i];
        result.energy[i] = cum;
    }
    if (cum > 0.0)
        for (double& e : result.energy) e /= cum;
    return result;
}

PodResult pod(const SnapshotMatrix& m) { return pod(m.data()); }

double spectral_residual(const PodResult& result, std::size_t r) {
    const std::size_t ns = result.singular_values.size();
    if (r > ns)
        throw InvalidInput("spectral_residual: mode count out of range");
    double tail = 0.0, total = 0.0;
    // accumulate smallest-first so tiny tail terms are not absorbed
    for (std::size_t i = ns; i-- > r;)
        tail += result.singular_values[i] * result.singular_values[i];
    for (std::size_t i = ns; i-- > 0;)
        total += result.singular_values[i] * result.singular_values[i];
    return std::sqrt(tail / total);
}

double projection_error(const DenseMatrix& snapshots, const PodResult& result, std::size_t r) {
    if (r < 1 || r > result.retained())
        throw InvalidInput("projection_error: mode count " + std::to_string(r) +
                           " outside [1, " + std::to_string(result.retained()) + "]");
    if (snapshots.rows != result.modes.rows)
        throw InvalidInput("projection_error: snapshot/mode dimension mismatch");

    double total = 0.0, residual = 0.0;
    std::vector<double> res(snapshots.rows);
    std::vector<double> coeff(r);
    for (std::size_t k = 0; k < snapshots.cols; ++k) {
        const auto u = snapshots.column(k);
        double norm2 = 0.0;
        for (double v : u) norm2 += v * v;
        for (std::size_t i = 0; i < r; ++i) {
            const auto phi = result.modes.column(i);
            double c = 0.0;
            for (std::size_t j = 0; j < u.size(); ++j) c += phi[j] * u[j];
            coeff[i] = c;
        }
        // explicit residual vector; norm^2 - proj^2 cancels catastrophically
        // once the residual is far below the snapshot norm
        std::copy(u.begin(), u.end(), res.begin());
        for (std::size_t i = 0; i < r; ++i) {
            const auto phi = result.modes.column(i);
            const double c = coeff[i];
            for (std::size_t j = 0; j < res.size(); ++j) res[j] -= c * phi[j];
        }
        double res2 = 0.0;
        for (double v : res) res2 += v * v;
        total += norm2;
        residual += res2;
    }
    const double direct = std::sqrt(residual / total);
    const double via_sigma = spectral_residual(result, r);
    if (std::abs(direct - via_sigma) > 1e-10)
        throw NumericalError("projection_error: direct residual " + std::to_string(direct) +
                             " disagrees with singular-value tail " + std::to_string(via_sigma));
    return direct;
}

double projection_error(const SnapshotMatrix& m, const PodResult& result, std::size_t r) {
    return projection_error(m.data(), result, r);
}

std::size_t modes_for_threshold(const PodResult& result, double eps) {
    if (!(eps > 0.0) || !(eps < 1.0))
        throw InvalidInput("modes_for_threshold: eps must be in (0, 1)");
    for (std::size_t r = 1; r <= result.retained(); ++r)
        if (spectral_residual(result, r) <= eps) return r;
    throw ThresholdUnreachable(
        "modes_for_threshold: threshold " + std::to_string(eps) +
            " unreachable; best achievable residual is " +
            std::to_string(spectral_residual(result, result.retained())),
        spectral_residual(result, result.retained()));
}

namespace {
void write_series(const std::filesystem::path& path, const char* value_header,
                  const std::vector<double>& values) {
    std::ofstream os(path);
    if (!os)
        throw FormatError("cannot open '" + path.string() + "' for writing");
    os << "mode," << value_header << '\n';
    char buf[64];
    for (std::size_t i = 0; i < values.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g", values[i]);
        os << (i + 1) << ',' << buf << '\n';
    }
}
}  // namespace

void write_singular_values_csv(const std::filesystem::path& path,
                               const std::vector<double>& values) {
    write_series(path, "value", values);
}

void write_energy_csv(const std::filesystem::path& path, const std::vector<double>& energy) {
    write_series(path, "energy", energy);
}

}  // namespace nnspod
