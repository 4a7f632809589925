#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "sparsefield/data_io.hpp"
#include "sparsefield/matrix.hpp"

namespace sparsefield {

// Ordered sensor index set gamma over a row-major H x W grid. The
// measurement operator C is implied by the indices and never stored
// densely.
struct Placement {
    std::size_t grid_height = 0;
    std::size_t grid_width = 0;
    std::vector<std::size_t> gamma;  // distinct flat indices, selection order

    Placement() = default;
    Placement(std::size_t height, std::size_t width, std::vector<std::size_t> indices);

    std::size_t size() const { return gamma.size(); }
    std::size_t cell_count() const { return grid_height * grid_width; }
    std::pair<std::size_t, std::size_t> coords(std::size_t i) const {
        return {gamma[i] / grid_width, gamma[i] % grid_width};
    }
};

struct ConnectivityReport {
    bool omega_defined = false;       // false for single-node placements
    std::size_t omega = 0;            // max over per_node_nearest (l1 cells)
    std::vector<std::size_t> per_node_nearest;
    bool connected = false;           // omega <= tau_com
    bool single_component = false;    // graph with edges at distance <= tau_com
    std::vector<std::size_t> bridges_added;  // flat indices appended by insert_bridges
};

// Greedy row-pivot selection on the score basis of the series (valid
// cells only). Raises DegeneracyError when the data cannot support r
// independent rows; the message reports the effective rank.
Placement select_sampling_locations(const SnapshotSeries& series, std::size_t r);

// y[i] = snapshot[gamma[i]]; C * phi without materializing C.
std::vector<double> measure(const Placement& placement, const FieldSnapshot& snapshot);

// Column t holds the measurement of snapshot t (r x M). Refuses
// sensors that sit on masked cells of the series.
Matrix measure_series(const Placement& placement, const SnapshotSeries& series);

ConnectivityReport analyze_connectivity(const Placement& placement, std::size_t tau_com);

// Appends relay nodes until the distance-tau_com graph is a single
// component. Original gamma order is preserved; bridges follow it.
std::pair<Placement, ConnectivityReport> insert_bridges(const Placement& placement,
                                                        std::size_t tau_com);

void save_placement(const Placement& placement, const std::string& path);
Placement load_placement(const std::string& path);

}  // namespace sparsefield
