#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "nnspod/pod.hpp"
#include "oracles.hpp"

using namespace nnspod;

namespace {

double dot_columns(const DenseMatrix& m, std::size_t a, std::size_t b) {
    double s = 0.0;
    for (std::size_t r = 0; r < m.rows; ++r) s += m(r, a) * m(r, b);
    return s;
}

}  // namespace

TEST_CASE("jacobi on a diagonal matrix") {
    DenseMatrix k(2, 2);
    k(0, 0) = 3.0;
    k(1, 1) = 1.0;
    const EigenResult e = jacobi_eigen(k);
    CHECK(e.values[0] == doctest::Approx(3.0));
    CHECK(e.values[1] == doctest::Approx(1.0));
    CHECK(std::abs(e.vectors(0, 0)) == doctest::Approx(1.0));
    CHECK(std::abs(e.vectors(1, 1)) == doctest::Approx(1.0));
    CHECK(e.vectors(1, 0) == doctest::Approx(0.0));
}

TEST_CASE("jacobi on the textbook 2x2") {
    DenseMatrix k(2, 2);
    k(0, 0) = 2.0; k(0, 1) = 1.0;
    k(1, 0) = 1.0; k(1, 1) = 2.0;
    const EigenResult e = jacobi_eigen(k);
    CHECK(e.values[0] == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(e.values[1] == doctest::Approx(1.0).epsilon(1e-12));
    const double s = 1.0 / std::sqrt(2.0);
    CHECK(std::abs(e.vectors(0, 0)) == doctest::Approx(s).epsilon(1e-12));
    CHECK(std::abs(e.vectors(1, 0)) == doctest::Approx(s).epsilon(1e-12));
    // second eigenvector is (1,-1)/sqrt(2) up to sign
    CHECK(e.vectors(0, 1) * e.vectors(1, 1) < 0.0);
}

TEST_CASE("jacobi reconstruction on random symmetric matrices") {
    for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
        const DenseMatrix k = oracles::random_symmetric(10, seed);
        const EigenResult e = jacobi_eigen(k);
        // rebuild V Lambda V^T
        double err2 = 0.0;
        for (std::size_t i = 0; i < 10; ++i)
            for (std::size_t j = 0; j < 10; ++j) {
                double v = 0.0;
                for (std::size_t l = 0; l < 10; ++l)
                    v += e.vectors(i, l) * e.values[l] * e.vectors(j, l);
                const double d = v - k(i, j);
                err2 += d * d;
            }
        CHECK(std::sqrt(err2) <= 1e-10);
        // eigenvector orthonormality
        for (std::size_t a = 0; a < 10; ++a)
            for (std::size_t b = a; b < 10; ++b) {
                const double expected = (a == b) ? 1.0 : 0.0;
                CHECK(std::abs(dot_columns(e.vectors, a, b) - expected) <= 1e-10);
            }
    }
}

TEST_CASE("jacobi rejects non-symmetric input") {
    DenseMatrix k(3, 3);
    k(0, 1) = 1.0;
    k(1, 0) = 2.0;
    CHECK_THROWS_AS(jacobi_eigen(k), InvalidInput);
    CHECK_THROWS_AS(jacobi_eigen(DenseMatrix(2, 3)), InvalidInput);
}

TEST_CASE("rank-1 snapshot matrix") {
    DenseMatrix x(8, 4);
    SplitMix64 rng(5);
    std::vector<double> base(8);
    for (double& v : base) v = rng.uniform() + 0.1;
    for (std::size_t k = 0; k < 4; ++k)
        for (std::size_t r = 0; r < 8; ++r) x(r, k) = base[r];
    const PodResult p = pod(x);
    CHECK(p.singular_values[1] / p.singular_values[0] < 1e-12);
    CHECK(p.retained() == 1);
    // the single mode is the normalized snapshot (sign fixed positive)
    double norm = 0.0;
    for (double v : base) norm += v * v;
    norm = std::sqrt(norm);
    for (std::size_t r = 0; r < 8; ++r)
        CHECK(p.modes(r, 0) == doctest::Approx(base[r] / norm).epsilon(1e-12));
    CHECK(projection_error(x, p, 1) < 1e-12);
    CHECK(modes_for_threshold(p, 1e-3) == 1);
}

TEST_CASE("orthogonal columns with known norms") {
    DenseMatrix x(4, 2);
    x(0, 0) = 2.0;  // norm 2
    x(1, 1) = 1.0;  // norm 1
    const PodResult p = pod(x);
    CHECK(p.singular_values[0] == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(p.singular_values[1] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(projection_error(x, p, 1) == doctest::Approx(1.0 / std::sqrt(5.0)).epsilon(1e-12));
}

TEST_CASE("singular values match the power-iteration oracle") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const DenseMatrix x = oracles::random_matrix(20, 10, seed);
        const PodResult p = pod(x);
        const auto expected = oracles::singular_values_power_iteration(x);
        REQUIRE(expected.size() == 10);
        for (std::size_t i = 0; i < 10; ++i)
            CHECK(p.singular_values[i] == doctest::Approx(expected[i]).epsilon(1e-10));
    }
}

TEST_CASE("projection error over the full retained basis is negligible") {
    const DenseMatrix x = oracles::random_matrix(15, 6, 99);
    const PodResult p = pod(x);
    CHECK(projection_error(x, p, p.retained()) < 1e-10);
    CHECK_THROWS_AS(projection_error(x, p, 0), InvalidInput);
    CHECK_THROWS_AS(projection_error(x, p, p.retained() + 1), InvalidInput);
}

TEST_CASE("modes_for_threshold boundary cases") {
    const DenseMatrix x = oracles::random_matrix(12, 5, 7);
    const PodResult p = pod(x);
    CHECK(modes_for_threshold(p, 1.0 - 1e-15) == 1);
    CHECK_THROWS_AS(modes_for_threshold(p, 1.5), InvalidInput);
    CHECK_THROWS_AS(modes_for_threshold(p, 0.0), InvalidInput);
    // a full-rank spectrum reaches any threshold with all retained modes
    CHECK(modes_for_threshold(p, 1e-300) == p.retained());
}

TEST_CASE("unreachable thresholds report the best achievable residual") {
    // a result whose dropped tail carries real energy: only one mode kept
    PodResult p;
    p.singular_values = {1.0, 0.5};
    p.modes = DenseMatrix(4, 1);
    p.modes(0, 0) = 1.0;
    p.energy = {0.8, 1.0};
    const double best = std::sqrt(0.25 / 1.25);
    try {
        modes_for_threshold(p, 1e-3);
        FAIL("expected ThresholdUnreachable");
    } catch (const ThresholdUnreachable& e) {
        CHECK(e.best_achievable == doctest::Approx(best).epsilon(1e-12));
    }
}

TEST_CASE("degenerate input is rejected") {
    CHECK_THROWS_AS(pod(DenseMatrix(6, 3)), InvalidInput);
}

TEST_CASE("mode orthonormality and energy monotonicity") {
    const DenseMatrix x = oracles::random_matrix(30, 12, 13);
    const PodResult p = pod(x);
    for (std::size_t a = 0; a < p.retained(); ++a)
        for (std::size_t b = a; b < p.retained(); ++b) {
            const double expected = (a == b) ? 1.0 : 0.0;
            CHECK(std::abs(dot_columns(p.modes, a, b) - expected) <= 1e-10);
        }
    for (std::size_t i = 1; i < p.energy.size(); ++i)
        CHECK(p.energy[i] >= p.energy[i - 1]);
    CHECK(p.energy.back() == doctest::Approx(1.0).epsilon(1e-14));
    for (std::size_t i = 1; i < p.singular_values.size(); ++i)
        CHECK(p.singular_values[i] <= p.singular_values[i - 1]);
}

TEST_CASE("scale equivariance") {
    const DenseMatrix x = oracles::random_matrix(10, 6, 21);
    DenseMatrix scaled = x;
    const double c = 3.7;
    for (double& v : scaled.a) v *= c;
    const PodResult p = pod(x);
    const PodResult ps = pod(scaled);
    for (std::size_t i = 0; i < p.singular_values.size(); ++i)
        CHECK(ps.singular_values[i] == doctest::Approx(c * p.singular_values[i]).epsilon(1e-12));
    for (std::size_t i = 0; i < p.retained(); ++i)
        for (std::size_t r = 0; r < x.rows; ++r)
            CHECK(ps.modes(r, i) == doctest::Approx(p.modes(r, i)).epsilon(1e-9));
}

TEST_CASE("rank-R truncation is optimal (Eckart-Young spot check)") {
    const std::size_t rows = 12, cols = 8, r = 3;
    const DenseMatrix x = oracles::random_matrix(rows, cols, 31);
    const PodResult p = pod(x);

    const double pod_residual = projection_error(x, p, r);
    CHECK(pod_residual == doctest::Approx(spectral_residual(p, r)).epsilon(1e-10));

    // no random rank-r subspace from 50 trials beats the POD subspace
    double total = 0.0;
    for (double v : x.a) total += v * v;
    for (std::uint64_t trial = 0; trial < 50; ++trial) {
        DenseMatrix basis = oracles::random_matrix(rows, r, 1000 + trial);
        // orthonormalize the columns
        for (std::size_t i = 0; i < r; ++i) {
            auto bi = basis.column(i);
            for (std::size_t j = 0; j < i; ++j) {
                const auto bj = basis.column(j);
                double proj = 0.0;
                for (std::size_t row = 0; row < rows; ++row) proj += bi[row] * bj[row];
                for (std::size_t row = 0; row < rows; ++row) bi[row] -= proj * bj[row];
            }
            double norm = 0.0;
            for (double v : bi) norm += v * v;
            norm = std::sqrt(norm);
            for (double& v : bi) v /= norm;
        }
        double residual = 0.0;
        for (std::size_t k = 0; k < cols; ++k) {
            const auto u = x.column(k);
            double norm2 = 0.0, proj2 = 0.0;
            for (double v : u) norm2 += v * v;
            for (std::size_t i = 0; i < r; ++i) {
                const auto b = basis.column(i);
                double cdot = 0.0;
                for (std::size_t row = 0; row < rows; ++row) cdot += b[row] * u[row];
                proj2 += cdot * cdot;
            }
            residual += std::max(norm2 - proj2, 0.0);
        }
        const double trial_error = std::sqrt(residual / total);
        CHECK(trial_error >= pod_residual - 1e-10);
    }
}
