#include "sparsefield/placement.hpp"

#include <algorithm>
#include <cstdlib>
#include <deque>
#include <fstream>
#include <limits>
#include <sstream>

#include "sparsefield/error.hpp"
#include "sparsefield/tensor_linalg.hpp"

namespace sparsefield {

namespace {

std::size_t l1_distance(const Placement& p, std::size_t i, std::size_t j) {
    const auto [ri, ci] = p.coords(i);
    const auto [rj, cj] = p.coords(j);
    const std::size_t dr = ri > rj ? ri - rj : rj - ri;
    const std::size_t dc = ci > cj ? ci - cj : cj - ci;
    return dr + dc;
}

// Component labels for the graph whose edges join nodes at l1
// distance <= tau. Plain BFS; placements are small.
std::vector<std::size_t> component_labels(const Placement& p, std::size_t tau) {
    const std::size_t n = p.size();
    std::vector<std::size_t> label(n, std::numeric_limits<std::size_t>::max());
    std::size_t next = 0;
    for (std::size_t s = 0; s < n; ++s) {
        if (label[s] != std::numeric_limits<std::size_t>::max()) continue;
        std::deque<std::size_t> queue{s};
        label[s] = next;
        while (!queue.empty()) {
            const std::size_t u = queue.front();
            queue.pop_front();
            for (std::size_t v = 0; v < n; ++v) {
                if (label[v] == std::numeric_limits<std::size_t>::max() &&
                    l1_distance(p, u, v) <= tau) {
                    label[v] = next;
                    queue.push_back(v);
                }
            }
        }
        ++next;
    }
    return label;
}

}  // namespace

Placement::Placement(std::size_t height, std::size_t width, std::vector<std::size_t> indices)
    : grid_height(height), grid_width(width), gamma(std::move(indices)) {
    if (grid_height == 0 || grid_width == 0) throw ArgumentError("placement grid must be non-empty");
    if (gamma.empty()) throw ArgumentError("placement must hold at least one index");
    if (gamma.size() > cell_count()) throw ArgumentError("more sensors than grid cells");
    std::vector<std::size_t> sorted = gamma;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        if (sorted[i] >= cell_count()) {
            throw ArgumentError("placement index " + std::to_string(sorted[i]) +
                                " outside grid of " + std::to_string(cell_count()) + " cells");
        }
        if (i > 0 && sorted[i] == sorted[i - 1]) {
            throw ArgumentError("duplicate placement index " + std::to_string(sorted[i]));
        }
    }
}

Placement select_sampling_locations(const SnapshotSeries& series, std::size_t r) {
    const std::size_t snapshots = series.snapshot_count();
    if (snapshots < 2) throw ArgumentError("need at least 2 snapshots to select locations");
    const std::vector<std::size_t> cells = series.valid_cells();
    if (r < 1 || r > std::min(cells.size(), snapshots)) {
        throw ArgumentError("sensor count " + std::to_string(r) + " outside [1, min(m, M)]");
    }

    const Matrix phi = series.to_valid_matrix();
    const SvdResult svd = thin_svd(phi);

    // Score basis supports only effective-rank many independent rows.
    const double tol = svd.s.empty() ? 0.0 : svd.s[0] * 1e-10;
    std::size_t effective_rank = 0;
    for (double s : svd.s)
        if (s > tol && s > 0.0) ++effective_rank;
    if (effective_rank < r) {
        throw DegeneracyError("cannot place " + std::to_string(r) +
                              " sensors: series has effective rank " +
                              std::to_string(effective_rank));
    }

    Matrix t_r(phi.rows(), r);
    for (std::size_t i = 0; i < phi.rows(); ++i)
        for (std::size_t k = 0; k < r; ++k) t_r(i, k) = svd.u(i, k) * svd.s[k];

    const PivotedQrResult qr = qr_row_pivot(t_r, r);
    std::vector<std::size_t> gamma(r);
    for (std::size_t k = 0; k < r; ++k) gamma[k] = cells[qr.pivots[k]];
    return Placement(series.height(), series.width(), std::move(gamma));
}

std::vector<double> measure(const Placement& placement, const FieldSnapshot& snapshot) {
    if (snapshot.height != placement.grid_height || snapshot.width != placement.grid_width) {
        throw ArgumentError("snapshot grid does not match placement grid");
    }
    std::vector<double> y(placement.size());
    for (std::size_t i = 0; i < placement.size(); ++i) y[i] = snapshot.values[placement.gamma[i]];
    return y;
}

Matrix measure_series(const Placement& placement, const SnapshotSeries& series) {
    if (series.height() != placement.grid_height || series.width() != placement.grid_width) {
        throw ArgumentError("series grid does not match placement grid");
    }
    for (std::size_t idx : placement.gamma) {
        if (!series.cell_valid(idx)) {
            throw ArgumentError("sensor at flat index " + std::to_string(idx) +
                                " sits on a masked cell");
        }
    }
    Matrix y(placement.size(), series.snapshot_count());
    for (std::size_t t = 0; t < series.snapshot_count(); ++t) {
        const FieldSnapshot& f = series.snapshots()[t];
        for (std::size_t i = 0; i < placement.size(); ++i) y(i, t) = f.values[placement.gamma[i]];
    }
    return y;
}

ConnectivityReport analyze_connectivity(const Placement& placement, std::size_t tau_com) {
    ConnectivityReport report;
    const std::size_t n = placement.size();
    if (n < 2) {
        // A lone node has no nearest neighbour, so omega is undefined;
        // it is trivially one component.
        report.omega_defined = false;
        report.connected = true;
        report.single_component = true;
        return report;
    }
    report.omega_defined = true;
    report.per_node_nearest.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t best = std::numeric_limits<std::size_t>::max();
        for (std::size_t j = 0; j < n; ++j) {
            if (j != i) best = std::min(best, l1_distance(placement, i, j));
        }
        report.per_node_nearest[i] = best;
        report.omega = std::max(report.omega, best);
    }
    report.connected = report.omega <= tau_com;

    const std::vector<std::size_t> label = component_labels(placement, tau_com);
    report.single_component =
        std::all_of(label.begin(), label.end(), [](std::size_t l) { return l == 0; });
    return report;
}

std::pair<Placement, ConnectivityReport> insert_bridges(const Placement& placement,
                                                        std::size_t tau_com) {
    if (tau_com < 1) throw ArgumentError("tau_com must be at least 1");
    Placement result = placement;
    std::vector<std::size_t> bridges;

    for (;;) {
        const std::vector<std::size_t> label = component_labels(result, tau_com);
        const bool single =
            std::all_of(label.begin(), label.end(), [](std::size_t l) { return l == 0; });
        if (single) break;

        // Closest pair of nodes in different components; ties resolved
        // by node order so the result is deterministic.
        std::size_t best_i = 0, best_j = 0;
        std::size_t best_d = std::numeric_limits<std::size_t>::max();
        for (std::size_t i = 0; i < result.size(); ++i) {
            for (std::size_t j = i + 1; j < result.size(); ++j) {
                if (label[i] == label[j]) continue;
                const std::size_t d = l1_distance(result, i, j);
                if (d < best_d) {
                    best_d = d;
                    best_i = i;
                    best_j = j;
                }
            }
        }

        // Walk the row-then-column lattice path between the pair and
        // drop ceil(d/tau) - 1 evenly spaced relays on it; consecutive
        // gaps never exceed tau.
        const auto [ra, ca] = result.coords(best_i);
        const auto [rb, cb] = result.coords(best_j);
        std::vector<std::size_t> path;  // flat indices at distance 1,2,...,d
        {
            std::size_t rr = ra, cc = ca;
            while (rr != rb) {
                rr += (rb > rr) ? 1 : static_cast<std::size_t>(-1);
                path.push_back(rr * result.grid_width + cc);
            }
            while (cc != cb) {
                cc += (cb > cc) ? 1 : static_cast<std::size_t>(-1);
                path.push_back(rr * result.grid_width + cc);
            }
        }
        const std::size_t d = path.size();
        const std::size_t count = (d + tau_com - 1) / tau_com - 1;
        std::vector<std::size_t> next_gamma = result.gamma;
        for (std::size_t k = 1; k <= count; ++k) {
            const std::size_t cell = path[k * d / (count + 1) - 1];
            if (std::find(next_gamma.begin(), next_gamma.end(), cell) == next_gamma.end()) {
                next_gamma.push_back(cell);
                bridges.push_back(cell);
            }
        }
        if (next_gamma.size() == result.gamma.size()) {
            // Every relay position was already occupied yet components
            // remained separate; cannot happen with gaps <= tau.
            throw Error("bridging made no progress");
        }
        result = Placement(result.grid_height, result.grid_width, std::move(next_gamma));
    }

    ConnectivityReport report = analyze_connectivity(result, tau_com);
    report.bridges_added = bridges;
    return {std::move(result), std::move(report)};
}

void save_placement(const Placement& placement, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw ParseError("cannot write " + path);
    out << placement.size() << ' ' << placement.grid_height << ' ' << placement.grid_width << '\n';
    for (std::size_t idx : placement.gamma) out << idx << '\n';
    if (!out) throw ParseError("short write to " + path);
}

Placement load_placement(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw ParseError(path + ": empty placement file");
    std::istringstream head(line);
    long long r = 0, h = 0, w = 0;
    if (!(head >> r >> h >> w) || r < 1 || h < 1 || w < 1) {
        throw ParseError(path + ": line 1: malformed header, expected 'r H W'");
    }
    std::string trailing;
    if (head >> trailing) throw ParseError(path + ": line 1: trailing tokens after header");

    std::vector<std::size_t> gamma;
    gamma.reserve(static_cast<std::size_t>(r));
    for (long long i = 0; i < r; ++i) {
        if (!std::getline(in, line)) {
            throw ParseError(path + ": expected " + std::to_string(r) + " indices, found " +
                             std::to_string(i));
        }
        std::istringstream row(line);
        long long idx = 0;
        if (!(row >> idx) || idx < 0 || (row >> trailing)) {
            throw ParseError(path + ": line " + std::to_string(i + 2) + ": bad index '" + line +
                             "'");
        }
        gamma.push_back(static_cast<std::size_t>(idx));
    }
    try {
        return Placement(static_cast<std::size_t>(h), static_cast<std::size_t>(w),
                         std::move(gamma));
    } catch (const ArgumentError& e) {
        throw ParseError(path + ": " + e.what());
    }
}

}  // namespace sparsefield
