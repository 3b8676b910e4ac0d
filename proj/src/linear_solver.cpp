#include "nnspod/linear_solver.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace nnspod {

void CsrMatrix::multiply(std::span<const double> x, std::span<double> y) const {
    for (std::size_t r = 0; r < n; ++r) {
        double acc = 0.0;
        for (std::size_t idx = row_ptr[r]; idx < row_ptr[r + 1]; ++idx)
            acc += val[idx] * x[col[idx]];
        y[r] = acc;
    }
}

std::vector<double> CsrMatrix::diagonal() const {
    std::vector<double> d(n, 0.0);
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t idx = row_ptr[r]; idx < row_ptr[r + 1]; ++idx)
            if (col[idx] == r) d[r] += val[idx];
    return d;
}

CsrMatrix CsrBuilder::build() const {
    CsrMatrix m;
    m.n = n_;
    m.row_ptr.resize(n_ + 1, 0);
    std::vector<std::pair<std::size_t, double>> merged;
    for (std::size_t r = 0; r < n_; ++r) {
        merged.assign(rows_[r].begin(), rows_[r].end());
        std::sort(merged.begin(), merged.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
        std::size_t count = 0;
        for (std::size_t i = 0; i < merged.size();) {
            std::size_t j = i;
            double v = 0.0;
            while (j < merged.size() && merged[j].first == merged[i].first) v += merged[j++].second;
            m.col.push_back(merged[i].first);
            m.val.push_back(v);
            ++count;
            i = j;
        }
        m.row_ptr[r + 1] = m.row_ptr[r] + count;
    }
    return m;
}

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

}  // namespace

std::vector<double> bicgstab(const CsrMatrix& A, std::span<const double> b,
                             std::span<const double> x0, const BicgstabOptions& opts) {
    const std::size_t n = A.n;
    if (b.size() != n || x0.size() != n)
        throw InvalidInput("bicgstab: dimension mismatch");

    const double bnorm = norm2(b);
    std::vector<double> x(x0.begin(), x0.end());
    if (bnorm == 0.0) {
        std::fill(x.begin(), x.end(), 0.0);
        return x;
    }

    std::vector<double> inv_diag = A.diagonal();
    for (double& d : inv_diag) d = (d != 0.0) ? 1.0 / d : 1.0;

    std::vector<double> r(n), rhat(n), p(n, 0.0), v(n, 0.0), s(n), t(n), phat(n), shat(n), tmp(n);
    A.multiply(x, tmp);
    for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - tmp[i];
    rhat = r;

    double rho_prev = 1.0, alpha = 1.0, omega = 1.0;
    const double target = opts.tol * bnorm;

    auto true_residual = [&]() {
        A.multiply(x, tmp);
        double s2 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double d = b[i] - tmp[i];
            s2 += d * d;
        }
        return std::sqrt(s2);
    };

    std::size_t iter = 0;
    for (; iter < opts.max_iters; ++iter) {
        const double rho = dot(rhat, r);
        if (rho == 0.0) {
            // breakdown: restart from the current iterate
            A.multiply(x, tmp);
            for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - tmp[i];
            rhat = r;
            rho_prev = 1.0;
            alpha = 1.0;
            omega = 1.0;
            std::fill(p.begin(), p.end(), 0.0);
            std::fill(v.begin(), v.end(), 0.0);
            if (norm2(r) <= target) break;
            continue;
        }
        const double beta = (rho / rho_prev) * (alpha / omega);
        for (std::size_t i = 0; i < n; ++i) p[i] = r[i] + beta * (p[i] - omega * v[i]);
        for (std::size_t i = 0; i < n; ++i) phat[i] = inv_diag[i] * p[i];
        A.multiply(phat, v);
        const double rhv = dot(rhat, v);
        if (rhv == 0.0)
            throw SolverError("bicgstab: breakdown (rhat.v = 0) at iteration " +
                              std::to_string(iter), true_residual(), iter);
        alpha = rho / rhv;
        for (std::size_t i = 0; i < n; ++i) s[i] = r[i] - alpha * v[i];
        if (norm2(s) <= target) {
            for (std::size_t i = 0; i < n; ++i) x[i] += alpha * phat[i];
            if (true_residual() <= target) break;
            for (std::size_t i = 0; i < n; ++i) r[i] = s[i];
            rho_prev = rho;
            continue;
        }
        for (std::size_t i = 0; i < n; ++i) shat[i] = inv_diag[i] * s[i];
        A.multiply(shat, t);
        const double tt = dot(t, t);
        if (tt == 0.0)
            throw SolverError("bicgstab: breakdown (t = 0) at iteration " + std::to_string(iter),
                              true_residual(), iter);
        omega = dot(t, s) / tt;
        for (std::size_t i = 0; i < n; ++i) x[i] += alpha * phat[i] + omega * shat[i];
        for (std::size_t i = 0; i < n; ++i) r[i] = s[i] - omega * t[i];
        rho_prev = rho;
        if (norm2(r) <= target && true_residual() <= target) break;
        if (omega == 0.0)
            throw SolverError("bicgstab: stagnation (omega = 0) at iteration " +
                              std::to_string(iter), true_residual(), iter);
    }

    const double final_res = true_residual();
    if (final_res > target)
        throw SolverError("bicgstab: no convergence within " + std::to_string(opts.max_iters) +
                          " iterations (relative residual " + std::to_string(final_res / bnorm) +
                          ")", final_res, iter);
    return x;
}

}  // namespace nnspod
