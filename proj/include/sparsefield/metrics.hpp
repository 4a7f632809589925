#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sparsefield/matrix.hpp"

namespace sparsefield {

struct EvalReport {
    std::size_t n_sensors = 0;
    std::size_t valid_cells = 0;  // effective m after mask exclusion
    double mse = 0.0;
    double var = 0.0;
    std::vector<double> per_cell_mse;  // temporal mean squared error per valid cell
    std::vector<double> per_cell_var;  // squared deviation of that mean from mse
};

// Mean of per-cell, per-snapshot squared errors. An optional validity
// mask (one byte per row, nonzero = valid) excludes rows from both the
// sum and the divisor.
double mse_at_n(const Matrix& truth, const Matrix& recon,
                const std::vector<std::uint8_t>& mask = {});

// Population variance of the per-row temporal-mean squared errors
// around the global mse.
double var_at_n(const Matrix& truth, const Matrix& recon,
                const std::vector<std::uint8_t>& mask = {});

// (benchmark - proposed) / benchmark * 100.
double improvement_pct(double benchmark, double proposed);

EvalReport evaluate(const Matrix& truth, const Matrix& recon, std::size_t n_sensors,
                    const std::vector<std::uint8_t>& mask = {});

struct MetricsRow {
    std::string strategy;
    std::size_t n_sensors = 0;
    double mse = 0.0;
    double var = 0.0;
};

void write_metrics_csv(const std::vector<MetricsRow>& rows, const std::string& path);
std::vector<MetricsRow> read_metrics_csv(const std::string& path);

}  // namespace sparsefield
