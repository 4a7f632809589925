#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "sparsefield/matrix.hpp"
#include "sparsefield/metrics.hpp"
#include "sparsefield/rng.hpp"

using namespace sparsefield;

namespace {

Matrix random_mat(std::size_t rows, std::size_t cols, std::uint64_t seed) {
    Rng rng(seed);
    Matrix a(rows, cols);
    for (double& v : a.data()) v = rng.uniform(-4.0, 4.0);
    return a;
}

// two-pass oracle: explicit per-row means, then population variance
std::pair<double, double> oracle_metrics(const Matrix& truth, const Matrix& recon) {
    const std::size_t m = truth.rows(), n = truth.cols();
    std::vector<double> row_mean(m, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            const double d = truth(i, j) - recon(i, j);
            row_mean[i] += d * d;
        }
        row_mean[i] /= static_cast<double>(n);
    }
    const double mse =
        std::accumulate(row_mean.begin(), row_mean.end(), 0.0) / static_cast<double>(m);
    double var = 0.0;
    for (double rm : row_mean) var += (rm - mse) * (rm - mse);
    var /= static_cast<double>(m);
    return {mse, var};
}

}  // namespace

TEST_CASE("mse worked examples") {
    Matrix truth{{1.0, 2.0}, {3.0, 4.0}};
    CHECK(mse_at_n(truth, truth) == 0.0);

    Matrix recon{{1.0, 2.0}, {3.0, 6.0}};
    CHECK(mse_at_n(truth, recon) == doctest::Approx(1.0).epsilon(1e-15));

    // uniform offset delta -> delta^2
    Matrix off = truth;
    for (double& v : off.data()) v += 0.75;
    CHECK(mse_at_n(truth, off) == doctest::Approx(0.75 * 0.75).epsilon(1e-13));
}

TEST_CASE("var worked examples") {
    Matrix truth{{0.0, 0.0}, {0.0, 0.0}};
    CHECK(var_at_n(truth, truth) == 0.0);

    // squared errors {0,2} at row 0 and {0,0} at row 1:
    // global mse 0.5, per-row means {1,0}, var = ((1-.5)^2+(0-.5)^2)/2
    Matrix recon{{0.0, std::sqrt(2.0)}, {0.0, 0.0}};
    CHECK(mse_at_n(truth, recon) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(var_at_n(truth, recon) == doctest::Approx(0.25).epsilon(1e-15));

    // uniform offset -> every row mean equals the global mse
    Matrix base = random_mat(3, 4, 1);
    Matrix shifted = base;
    for (double& v : shifted.data()) v += 1.5;
    CHECK(var_at_n(base, shifted) == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("metrics match the two-pass oracle to 1e-12") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        Matrix truth = random_mat(6, 9, 100 + seed);
        Matrix recon = random_mat(6, 9, 200 + seed);
        const auto [mse_o, var_o] = oracle_metrics(truth, recon);
        CHECK(std::abs(mse_at_n(truth, recon) - mse_o) < 1e-12);
        CHECK(std::abs(var_at_n(truth, recon) - var_o) < 1e-12);
    }
}

TEST_CASE("mse is invariant under simultaneous permutations") {
    Matrix truth = random_mat(5, 7, 42);
    Matrix recon = random_mat(5, 7, 43);
    const double base = mse_at_n(truth, recon);

    // reverse rows and columns of both
    Matrix pt(5, 7), pr(5, 7);
    for (std::size_t i = 0; i < 5; ++i) {
        for (std::size_t j = 0; j < 7; ++j) {
            pt(i, j) = truth(4 - i, 6 - j);
            pr(i, j) = recon(4 - i, 6 - j);
        }
    }
    CHECK(mse_at_n(pt, pr) == doctest::Approx(base).epsilon(1e-14));
}

TEST_CASE("masked rows are excluded from sums and divisor") {
    Matrix truth{{0.0, 0.0}, {1.0, 1.0}, {2.0, 2.0}};
    Matrix recon{{0.0, 0.0}, {3.0, 3.0}, {999.0, -999.0}};
    std::vector<std::uint8_t> mask{1, 1, 0};
    // only rows 0 and 1 count: squared errors {0,0} and {4,4}
    CHECK(mse_at_n(truth, recon, mask) == doctest::Approx(2.0).epsilon(1e-15));
    // per-row means {0,4}, mse 2 -> var = ((0-2)^2 + (4-2)^2)/2 = 4
    CHECK(var_at_n(truth, recon, mask) == doctest::Approx(4.0).epsilon(1e-15));

    EvalReport rep = evaluate(truth, recon, 5, mask);
    CHECK(rep.valid_cells == 2);
    CHECK(rep.n_sensors == 5);
    CHECK(rep.mse == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(rep.per_cell_mse.size() == 2);
    CHECK(rep.per_cell_mse[1] == doctest::Approx(4.0).epsilon(1e-15));
}

TEST_CASE("shape mismatches and degenerate masks are rejected") {
    Matrix a(2, 2), b(2, 3);
    CHECK_THROWS_AS(mse_at_n(a, b), ArgumentError);
    CHECK_THROWS_AS(var_at_n(a, b), ArgumentError);
    Matrix c(2, 2);
    CHECK_THROWS_AS(mse_at_n(c, c, std::vector<std::uint8_t>{1}), ArgumentError);
    CHECK_THROWS_AS(mse_at_n(c, c, std::vector<std::uint8_t>{0, 0}), ArgumentError);
}

TEST_CASE("improvement percentage reproduces published rows") {
    // 0.4192 -> 0.3910 improves by 6.73% after rounding
    CHECK(std::abs(improvement_pct(0.4192, 0.3910) - 6.73) < 0.01);
    // 0.0096 -> 0.0056 improves by 41.67%
    CHECK(std::abs(improvement_pct(0.0096, 0.0056) - 41.67) < 0.01);
    CHECK(improvement_pct(3.5, 3.5) == 0.0);
    CHECK_THROWS_AS(improvement_pct(0.0, 1.0), ArgumentError);
}

TEST_CASE("metrics csv round-trip") {
    const auto path = std::filesystem::temp_directory_path() / "sparsefield_test_metrics.csv";
    std::vector<MetricsRow> rows{{"qr+linear", 10, 0.0073, 0.0001},
                                 {"qr+neural", 10, 0.0021, 0.00005},
                                 {"rand+linear", 10, 0.0191, 0.0034}};
    write_metrics_csv(rows, path.string());
    std::vector<MetricsRow> back = read_metrics_csv(path.string());
    REQUIRE(back.size() == rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        CHECK(back[i].strategy == rows[i].strategy);
        CHECK(back[i].n_sensors == rows[i].n_sensors);
        CHECK(back[i].mse == rows[i].mse);
        CHECK(back[i].var == rows[i].var);
    }
    std::filesystem::remove(path);
}
