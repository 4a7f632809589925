#pragma once

#include <cstdint>
#include <vector>

#include "sparsefield/data_io.hpp"
#include "sparsefield/matrix.hpp"
#include "sparsefield/placement.hpp"

namespace sparsefield {

// Rank-r SVD artifacts of a training series: the score basis
// T_r = Psi_r * Sigma_r over valid cells, plus the fitted right
// factors. valid_rows maps basis row -> flat grid cell.
struct PrincipalBasis {
    std::size_t grid_height = 0;
    std::size_t grid_width = 0;
    std::size_t rank = 0;
    Matrix t_r;                           // m_valid x r
    Matrix v_r;                           // r x M
    std::vector<double> singular_values;  // length r, non-increasing
    std::vector<std::size_t> valid_rows;  // length m_valid
};

PrincipalBasis fit_principal_basis(const SnapshotSeries& series, std::size_t r);

// Gappy reconstruction: solve (C T_r) x = Y column-wise in the
// least-squares sense and return T_r x scattered onto the full grid
// (masked cells stay 0). Y has one column per snapshot.
Matrix reconstruct_linear(const PrincipalBasis& basis, const Placement& placement,
                          const Matrix& y);

// r distinct draws without replacement from the valid cells,
// deterministic per seed.
Placement random_placement(std::size_t grid_height, std::size_t grid_width, std::size_t r,
                           std::uint64_t seed, const std::vector<std::uint8_t>& mask = {});

}  // namespace sparsefield
