#pragma once

#include <cstddef>
#include <vector>

#include "sparsefield/matrix.hpp"

namespace sparsefield {

/// Thin SVD a = u * diag(s) * vt with k = min(rows, cols).
///
/// Singular values are non-negative and non-increasing; u columns and vt
/// rows are orthonormal. Sign convention: the largest-magnitude entry of
/// each u column is non-negative (lowest index wins magnitude ties), so
/// repeated runs on identical input bits give identical output bits.
struct SvdResult {
    Matrix u;               // rows x k
    std::vector<double> s;  // length k, descending
    Matrix vt;              // k x cols
};

/// Row-pivoted QR of the input's transpose. `pivots` lists the selected
/// row indices in selection order; |diag(r_factor)| is non-increasing.
struct PivotedQrResult {
    std::vector<std::size_t> pivots;
    Matrix q;         // cols(t) x steps, orthonormal columns
    Matrix r_factor;  // steps x rows(t), upper trapezoid in pivot order
};

/// One-sided Jacobi SVD. Deterministic: fixed sweep order, fixed rotation
/// formulas, stable descending sort. Throws ConvergenceError if the sweep
/// cap is exceeded and ArgumentError on empty input.
SvdResult thin_svd(const Matrix& a);

/// Greedy row selection: at each of `r` steps pick the row whose residual
/// (after Householder deflation against the rows already chosen) has the
/// largest Euclidean norm, lowest index on ties.
PivotedQrResult qr_row_pivot(const Matrix& t, std::size_t r);

/// Minimizes ||a*x - b||_F via Householder QR; a must have rows >= cols.
/// Throws SingularityError when the R-diagonal condition estimate exceeds
/// `condition_limit`.
Matrix solve_least_squares(const Matrix& a, const Matrix& b,
                           double condition_limit = 1e12);

}  // namespace sparsefield
