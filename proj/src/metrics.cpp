#include "sparsefield/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "sparsefield/error.hpp"

namespace sparsefield {

namespace {

void check_shapes(const Matrix& truth, const Matrix& recon,
                  const std::vector<std::uint8_t>& mask) {
    if (truth.rows() != recon.rows() || truth.cols() != recon.cols()) {
        throw ArgumentError("truth and reconstruction shapes differ");
    }
    if (truth.cols() == 0 || truth.rows() == 0) throw ArgumentError("empty matrices");
    if (!mask.empty() && mask.size() != truth.rows()) {
        throw ArgumentError("mask length does not match row count");
    }
}

}  // namespace

double mse_at_n(const Matrix& truth, const Matrix& recon, const std::vector<std::uint8_t>& mask) {
    return evaluate(truth, recon, 0, mask).mse;
}

double var_at_n(const Matrix& truth, const Matrix& recon, const std::vector<std::uint8_t>& mask) {
    return evaluate(truth, recon, 0, mask).var;
}

double improvement_pct(double benchmark, double proposed) {
    if (benchmark == 0.0) throw ArgumentError("improvement undefined for zero benchmark");
    return (benchmark - proposed) / benchmark * 100.0;
}

EvalReport evaluate(const Matrix& truth, const Matrix& recon, std::size_t n_sensors,
                    const std::vector<std::uint8_t>& mask) {
    check_shapes(truth, recon, mask);
    EvalReport report;
    report.n_sensors = n_sensors;

    const std::size_t cols = truth.cols();
    for (std::size_t i = 0; i < truth.rows(); ++i) {
        if (!mask.empty() && mask[i] == 0) continue;
        double acc = 0.0;
        for (std::size_t j = 0; j < cols; ++j) {
            const double d = truth(i, j) - recon(i, j);
            acc += d * d;
        }
        report.per_cell_mse.push_back(acc / static_cast<double>(cols));
    }
    report.valid_cells = report.per_cell_mse.size();
    if (report.valid_cells == 0) throw ArgumentError("mask excludes every row");

    double total = 0.0;
    for (double v : report.per_cell_mse) total += v;
    report.mse = total / static_cast<double>(report.valid_cells);

    report.per_cell_var.reserve(report.valid_cells);
    double var_total = 0.0;
    for (double v : report.per_cell_mse) {
        const double dev = v - report.mse;
        report.per_cell_var.push_back(dev * dev);
        var_total += dev * dev;
    }
    report.var = var_total / static_cast<double>(report.valid_cells);
    return report;
}

void write_metrics_csv(const std::vector<MetricsRow>& rows, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw ParseError("cannot write " + path);
    out << "strategy,n_sensors,mse,var\n";
    char buf[64];
    for (const MetricsRow& row : rows) {
        out << row.strategy << ',' << row.n_sensors << ',';
        std::snprintf(buf, sizeof buf, "%.17g", row.mse);
        out << buf << ',';
        std::snprintf(buf, sizeof buf, "%.17g", row.var);
        out << buf << '\n';
    }
    if (!out) throw ParseError("short write to " + path);
}

std::vector<MetricsRow> read_metrics_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw ParseError(path + ": empty file");
    std::vector<MetricsRow> rows;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream ss(line);
        MetricsRow row;
        std::string field;
        try {
            if (!std::getline(ss, row.strategy, ',')) throw std::invalid_argument(line);
            if (!std::getline(ss, field, ',')) throw std::invalid_argument(line);
            row.n_sensors = static_cast<std::size_t>(std::stoull(field));
            if (!std::getline(ss, field, ',')) throw std::invalid_argument(line);
            row.mse = std::stod(field);
            if (!std::getline(ss, field)) throw std::invalid_argument(line);
            row.var = std::stod(field);
        } catch (const std::exception&) {
            throw ParseError(path + ": line " + std::to_string(lineno) + ": malformed row");
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace sparsefield
