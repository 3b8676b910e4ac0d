// Independent reference implementations used only by tests. These must not
// share code with the library paths they check.
#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "nnspod/dense.hpp"
#include "nnspod/fom_advection.hpp"
#include "nnspod/mlp.hpp"

namespace oracles {

/// Singular values of an m x n matrix via power iteration with deflation
/// on the m x m outer-product matrix, run until the Rayleigh quotient
/// settles to rel_tol. Returns min(m, n) values, descending.
inline std::vector<double> singular_values_power_iteration(const nnspod::DenseMatrix& x,
                                                           double rel_tol = 1e-12,
                                                           std::size_t max_iters = 500000) {
    const std::size_t m = x.rows, n = x.cols;
    nnspod::DenseMatrix a(m, m);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < n; ++k) s += x(i, k) * x(j, k);
            a(i, j) = s;
        }

    const std::size_t count = std::min(m, n);
    std::vector<double> sigmas;
    nnspod::SplitMix64 rng(0x5eedULL);
    for (std::size_t round = 0; round < count; ++round) {
        std::vector<double> v(m);
        for (double& e : v) e = rng.uniform() - 0.5;
        double lambda = 0.0;
        for (std::size_t it = 0; it < max_iters; ++it) {
            std::vector<double> w(m, 0.0);
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t j = 0; j < m; ++j) w[i] += a(i, j) * v[j];
            double norm = 0.0;
            for (double e : w) norm += e * e;
            norm = std::sqrt(norm);
            if (norm == 0.0) {
                lambda = 0.0;
                break;
            }
            for (double& e : w) e /= norm;
            double next = 0.0;
            for (std::size_t i = 0; i < m; ++i) {
                double av = 0.0;
                for (std::size_t j = 0; j < m; ++j) av += a(i, j) * w[j];
                next += w[i] * av;
            }
            v = w;
            if (it > 0 && std::abs(next - lambda) <= rel_tol * std::abs(next)) {
                lambda = next;
                break;
            }
            lambda = next;
        }
        sigmas.push_back(std::sqrt(std::max(lambda, 0.0)));
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < m; ++j) a(i, j) -= lambda * v[i] * v[j];
    }
    return sigmas;
}

/// Characteristic foot point via RK4 with a fixed tiny step (reference for
/// the library integrator).
inline nnspod::Point integrate_reference(nnspod::Point p, double t_from, double t_to,
                                         const nnspod::AdvectionField& field, double step) {
    const double span = t_to - t_from;
    const auto n = static_cast<std::size_t>(std::ceil(std::abs(span) / step));
    const double h = (n == 0) ? 0.0 : span / static_cast<double>(n);
    double t = t_from;
    for (std::size_t s = 0; s < n; ++s) {
        const nnspod::Point k1 = field.at(p.x, p.y, t);
        const nnspod::Point k2 =
            field.at(p.x + 0.5 * h * k1.x, p.y + 0.5 * h * k1.y, t + 0.5 * h);
        const nnspod::Point k3 =
            field.at(p.x + 0.5 * h * k2.x, p.y + 0.5 * h * k2.y, t + 0.5 * h);
        const nnspod::Point k4 = field.at(p.x + h * k3.x, p.y + h * k3.y, t + h);
        p.x += h / 6.0 * (k1.x + 2.0 * k2.x + 2.0 * k3.x + k4.x);
        p.y += h / 6.0 * (k1.y + 2.0 * k2.y + 2.0 * k3.y + k4.y);
        t += h;
    }
    return p;
}

/// Central-difference gradient check of backward(): max relative error over
/// `probes` random (input, parameter) pairs, excluding probes whose
/// pre-activations sit within 1e-4 of an activation kink. Denominators are
/// floored at 1e-3 so finite-difference roundoff on near-zero gradients
/// does not dominate.
inline double max_gradient_error(nnspod::Mlp net, std::size_t probes, std::uint64_t seed) {
    using nnspod::Activation;
    std::vector<double*> params;
    for (nnspod::Layer& l : net.layers) {
        for (double& w : l.weights) params.push_back(&w);
        for (double& b : l.bias) params.push_back(&b);
        if (l.activation == Activation::prelu) params.push_back(&l.prelu_slope);
    }
    auto flat = [&](const nnspod::MlpGradients& g) {
        std::vector<double> out;
        for (std::size_t l = 0; l < net.layers.size(); ++l) {
            out.insert(out.end(), g.layers[l].weights.begin(), g.layers[l].weights.end());
            out.insert(out.end(), g.layers[l].bias.begin(), g.layers[l].bias.end());
            if (net.layers[l].activation == Activation::prelu)
                out.push_back(g.layers[l].prelu_slope);
        }
        return out;
    };
    auto near_kink = [&](const nnspod::ForwardCache& cache) {
        for (std::size_t l = 0; l < net.layers.size(); ++l) {
            const Activation act = net.layers[l].activation;
            for (double z : cache.preacts[l]) {
                if (act == Activation::prelu && std::abs(z) < 1e-4) return true;
                if (act == Activation::hard_sigmoid &&
                    (std::abs(z - 3.0) < 1e-4 || std::abs(z + 3.0) < 1e-4))
                    return true;
            }
        }
        return false;
    };

    nnspod::SplitMix64 rng(seed);
    std::vector<double> input(net.input_dim()), weights_out(net.output_dim());
    const double h = 1e-6;
    double worst = 0.0;
    std::size_t done = 0, guard = 0;
    while (done < probes && ++guard < probes * 50) {
        for (double& v : input) v = rng.uniform();
        for (double& v : weights_out) v = 2.0 * rng.uniform() - 1.0;

        nnspod::ForwardCache cache;
        nnspod::forward(net, input, &cache);
        if (near_kink(cache)) continue;

        nnspod::MlpGradients grads = nnspod::MlpGradients::zeros_like(net);
        nnspod::backward(net, cache, weights_out, &grads);
        const auto analytic = flat(grads);

        const auto idx = static_cast<std::size_t>(rng.next() % params.size());
        double* p = params[idx];
        const double saved = *p;
        auto loss = [&]() {
            const auto y = nnspod::forward(net, input);
            double s = 0.0;
            for (std::size_t i = 0; i < y.size(); ++i) s += weights_out[i] * y[i];
            return s;
        };
        *p = saved + h;
        const double lp = loss();
        *p = saved - h;
        const double lm = loss();
        *p = saved;

        const double numeric = (lp - lm) / (2.0 * h);
        const double denom = std::max({std::abs(analytic[idx]), std::abs(numeric), 1e-3});
        worst = std::max(worst, std::abs(analytic[idx] - numeric) / denom);
        ++done;
    }
    if (done != probes) throw std::runtime_error("gradient check: too many kink rejections");
    return worst;
}

inline nnspod::DenseMatrix random_matrix(std::size_t rows, std::size_t cols,
                                         std::uint64_t seed) {
    nnspod::DenseMatrix m(rows, cols);
    nnspod::SplitMix64 rng(seed);
    for (double& v : m.a) v = 2.0 * rng.uniform() - 1.0;
    return m;
}

inline nnspod::DenseMatrix random_symmetric(std::size_t n, std::uint64_t seed) {
    nnspod::DenseMatrix m(n, n);
    nnspod::SplitMix64 rng(seed);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j) {
            const double v = 2.0 * rng.uniform() - 1.0;
            m(i, j) = v;
            m(j, i) = v;
        }
    return m;
}

}  // namespace oracles
