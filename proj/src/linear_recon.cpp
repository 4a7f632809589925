#include "sparsefield/linear_recon.hpp"

#include <algorithm>
#include <unordered_map>

#include "sparsefield/error.hpp"
#include "sparsefield/rng.hpp"
#include "sparsefield/tensor_linalg.hpp"

namespace sparsefield {

PrincipalBasis fit_principal_basis(const SnapshotSeries& series, std::size_t r) {
    const std::size_t snapshots = series.snapshot_count();
    const std::vector<std::size_t> cells = series.valid_cells();
    if (r < 1 || r > std::min(cells.size(), snapshots)) {
        throw ArgumentError("rank " + std::to_string(r) + " outside [1, min(m, M)]");
    }
    const Matrix phi = series.to_valid_matrix();
    const SvdResult svd = thin_svd(phi);

    PrincipalBasis basis;
    basis.grid_height = series.height();
    basis.grid_width = series.width();
    basis.rank = r;
    basis.valid_rows = cells;
    basis.t_r = Matrix(phi.rows(), r);
    basis.v_r = Matrix(r, snapshots);
    basis.singular_values.assign(svd.s.begin(), svd.s.begin() + static_cast<std::ptrdiff_t>(r));
    for (std::size_t i = 0; i < phi.rows(); ++i)
        for (std::size_t k = 0; k < r; ++k) basis.t_r(i, k) = svd.u(i, k) * svd.s[k];
    for (std::size_t k = 0; k < r; ++k)
        for (std::size_t t = 0; t < snapshots; ++t) basis.v_r(k, t) = svd.vt(k, t);
    return basis;
}

Matrix reconstruct_linear(const PrincipalBasis& basis, const Placement& placement,
                          const Matrix& y) {
    if (placement.grid_height != basis.grid_height ||
        placement.grid_width != basis.grid_width) {
        throw ArgumentError("placement grid does not match basis grid");
    }
    if (y.rows() != placement.size()) {
        throw ArgumentError("measurement rows (" + std::to_string(y.rows()) +
                            ") do not match placement size (" + std::to_string(placement.size()) +
                            ")");
    }
    if (placement.size() < basis.rank) {
        throw ArgumentError("need at least rank-many sensors to invert the score basis");
    }

    // Rows of C*T_r are the basis rows under the sensors.
    std::unordered_map<std::size_t, std::size_t> row_of_cell;
    row_of_cell.reserve(basis.valid_rows.size());
    for (std::size_t i = 0; i < basis.valid_rows.size(); ++i) row_of_cell[basis.valid_rows[i]] = i;

    Matrix c_t(placement.size(), basis.rank);
    for (std::size_t i = 0; i < placement.size(); ++i) {
        const auto it = row_of_cell.find(placement.gamma[i]);
        if (it == row_of_cell.end()) {
            throw ArgumentError("sensor at flat index " + std::to_string(placement.gamma[i]) +
                                " sits on a masked cell");
        }
        for (std::size_t k = 0; k < basis.rank; ++k) c_t(i, k) = basis.t_r(it->second, k);
    }

    Matrix x(basis.rank, y.cols());
    try {
        x = solve_least_squares(c_t, y);
    } catch (const SingularityError&) {
        throw SingularityError(
            "C*T_r is numerically singular; choose a different placement");
    }

    const Matrix recon_valid = basis.t_r * x;  // m_valid x K
    Matrix full(basis.grid_height * basis.grid_width, y.cols());
    for (std::size_t i = 0; i < basis.valid_rows.size(); ++i)
        for (std::size_t t = 0; t < y.cols(); ++t)
            full(basis.valid_rows[i], t) = recon_valid(i, t);
    return full;
}

Placement random_placement(std::size_t grid_height, std::size_t grid_width, std::size_t r,
                           std::uint64_t seed, const std::vector<std::uint8_t>& mask) {
    const std::size_t cells = grid_height * grid_width;
    if (!mask.empty() && mask.size() != cells) throw ArgumentError("mask length does not match grid");
    std::vector<std::size_t> pool;
    pool.reserve(cells);
    for (std::size_t i = 0; i < cells; ++i)
        if (mask.empty() || mask[i] != 0) pool.push_back(i);
    if (r < 1 || r > pool.size()) {
        throw ArgumentError("cannot place " + std::to_string(r) + " sensors on " +
                            std::to_string(pool.size()) + " valid cells");
    }
    // Partial Fisher-Yates over the valid-cell pool.
    Rng rng(seed);
    std::vector<std::size_t> gamma(r);
    for (std::size_t i = 0; i < r; ++i) {
        const std::size_t j = i + rng.index(pool.size() - i);
        std::swap(pool[i], pool[j]);
        gamma[i] = pool[i];
    }
    return Placement(grid_height, grid_width, std::move(gamma));
}

}  // namespace sparsefield
