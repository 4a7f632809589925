#include "sparsefield/tensor_linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace sparsefield {

namespace {

constexpr int kMaxJacobiSweeps = 60;
constexpr double kJacobiTol = 1e-15;

// One-sided Jacobi on the columns of w (rows >= cols). On return the
// columns of w are mutually orthogonal and v accumulates the rotations,
// so original_w = w * v^T.
void jacobi_orthogonalize(Matrix& w, Matrix& v) {
    const std::size_t m = w.rows();
    const std::size_t n = w.cols();
    for (int sweep = 0; sweep < kMaxJacobiSweeps; ++sweep) {
        bool rotated = false;
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                double alpha = 0.0, beta = 0.0, gamma = 0.0;
                for (std::size_t i = 0; i < m; ++i) {
                    const double wp = w(i, p), wq = w(i, q);
                    alpha += wp * wp;
                    beta += wq * wq;
                    gamma += wp * wq;
                }
                if (alpha == 0.0 || beta == 0.0) continue;
                if (std::abs(gamma) <= kJacobiTol * std::sqrt(alpha * beta)) continue;
                rotated = true;
                const double zeta = (beta - alpha) / (2.0 * gamma);
                const double t = (zeta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                for (std::size_t i = 0; i < m; ++i) {
                    const double wp = w(i, p), wq = w(i, q);
                    w(i, p) = c * wp - s * wq;
                    w(i, q) = s * wp + c * wq;
                }
                for (std::size_t i = 0; i < n; ++i) {
                    const double vp = v(i, p), vq = v(i, q);
                    v(i, p) = c * vp - s * vq;
                    v(i, q) = s * vp + c * vq;
                }
            }
        }
        if (!rotated) return;
    }
    throw ConvergenceError("one-sided Jacobi SVD did not converge within " +
                           std::to_string(kMaxJacobiSweeps) + " sweeps");
}

// Fill zero-norm u columns with unit vectors orthonormal to the rest.
// Candidate e_i with the largest residual wins (lowest index on ties).
void complete_orthonormal_columns(Matrix& u, std::size_t from) {
    const std::size_t m = u.rows();
    const std::size_t k = u.cols();
    for (std::size_t j = from; j < k; ++j) {
        std::vector<double> best;
        double best_norm2 = -1.0;
        for (std::size_t cand = 0; cand < m; ++cand) {
            std::vector<double> e(m, 0.0);
            e[cand] = 1.0;
            for (std::size_t c = 0; c < j; ++c) {
                double dot = 0.0;
                for (std::size_t i = 0; i < m; ++i) dot += u(i, c) * e[i];
                for (std::size_t i = 0; i < m; ++i) e[i] -= dot * u(i, c);
            }
            double n2 = 0.0;
            for (double x : e) n2 += x * x;
            if (n2 > best_norm2) {
                best_norm2 = n2;
                best = std::move(e);
            }
        }
        // Re-orthogonalize once for accuracy, then normalize.
        for (std::size_t c = 0; c < j; ++c) {
            double dot = 0.0;
            for (std::size_t i = 0; i < m; ++i) dot += u(i, c) * best[i];
            for (std::size_t i = 0; i < m; ++i) best[i] -= dot * u(i, c);
        }
        double norm = 0.0;
        for (double x : best) norm += x * x;
        norm = std::sqrt(norm);
        for (std::size_t i = 0; i < m; ++i) u(i, j) = best[i] / norm;
    }
}

SvdResult svd_tall(const Matrix& a) {
    const std::size_t m = a.rows();
    const std::size_t n = a.cols();
    Matrix w = a;
    Matrix v = Matrix::identity(n);
    jacobi_orthogonalize(w, v);

    std::vector<double> norms(n);
    for (std::size_t j = 0; j < n; ++j) {
        double s2 = 0.0;
        for (std::size_t i = 0; i < m; ++i) s2 += w(i, j) * w(i, j);
        norms[j] = std::sqrt(s2);
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t i, std::size_t j) { return norms[i] > norms[j]; });

    SvdResult out;
    out.u = Matrix(m, n);
    out.vt = Matrix(n, n);
    out.s.resize(n);
    std::size_t nonzero = n;
    for (std::size_t j = 0; j < n; ++j) {
        const std::size_t src = order[j];
        out.s[j] = norms[src];
        if (norms[src] > 0.0) {
            for (std::size_t i = 0; i < m; ++i) out.u(i, j) = w(i, src) / norms[src];
        } else if (nonzero == n) {
            nonzero = j;
        }
        for (std::size_t i = 0; i < n; ++i) out.vt(j, i) = v(i, src);
    }
    if (nonzero < n) complete_orthonormal_columns(out.u, nonzero);

    // Sign convention: largest-magnitude entry of each left vector >= 0.
    for (std::size_t j = 0; j < n; ++j) {
        std::size_t arg = 0;
        double best = -1.0;
        for (std::size_t i = 0; i < m; ++i) {
            const double mag = std::abs(out.u(i, j));
            if (mag > best) {
                best = mag;
                arg = i;
            }
        }
        if (out.u(arg, j) < 0.0) {
            for (std::size_t i = 0; i < m; ++i) out.u(i, j) = -out.u(i, j);
            for (std::size_t i = 0; i < n; ++i) out.vt(j, i) = -out.vt(j, i);
        }
    }
    return out;
}

}  // namespace

SvdResult thin_svd(const Matrix& a) {
    if (a.empty()) throw ArgumentError("thin_svd: empty matrix");
    if (!a.all_finite()) throw ArgumentError("thin_svd: non-finite entries");
    if (a.rows() >= a.cols()) return svd_tall(a);
    // Wide input: factor the transpose and swap the roles of u and v.
    SvdResult t = svd_tall(a.transposed());
    SvdResult out;
    out.s = std::move(t.s);
    out.u = t.vt.transposed();
    out.vt = t.u.transposed();
    // Re-apply the sign convention to the new left vectors.
    const std::size_t m = out.u.rows(), k = out.u.cols(), n = out.vt.cols();
    for (std::size_t j = 0; j < k; ++j) {
        std::size_t arg = 0;
        double best = -1.0;
        for (std::size_t i = 0; i < m; ++i) {
            const double mag = std::abs(out.u(i, j));
            if (mag > best) {
                best = mag;
                arg = i;
            }
        }
        if (out.u(arg, j) < 0.0) {
            for (std::size_t i = 0; i < m; ++i) out.u(i, j) = -out.u(i, j);
            for (std::size_t i = 0; i < n; ++i) out.vt(j, i) = -out.vt(j, i);
        }
    }
    return out;
}

PivotedQrResult qr_row_pivot(const Matrix& t, std::size_t r) {
    const std::size_t n = t.rows();   // candidate rows
    const std::size_t c = t.cols();
    if (r < 1) throw ArgumentError("qr_row_pivot: r must be >= 1");
    if (r > n) {
        throw ArgumentError("qr_row_pivot: r = " + std::to_string(r) + " exceeds row count " +
                            std::to_string(n));
    }

    // Column-pivoted Householder QR on x = t^T (c x n); column j of x is
    // row j of t. Only r reflection steps are taken.
    Matrix x = t.transposed();
    std::vector<std::size_t> colmap(n);
    std::iota(colmap.begin(), colmap.end(), 0);
    const std::size_t steps = std::min(r, c);

    std::vector<std::vector<double>> reflectors;
    std::vector<std::size_t> pivots;
    pivots.reserve(r);

    for (std::size_t k = 0; k < steps; ++k) {
        // Residual squared norms below row k; on exact ties the lowest
        // original row index wins (positions get permuted by the swaps).
        std::size_t best = k;
        double best_n2 = -1.0;
        for (std::size_t j = k; j < n; ++j) {
            double n2 = 0.0;
            for (std::size_t i = k; i < c; ++i) n2 += x(i, j) * x(i, j);
            if (n2 > best_n2 || (n2 == best_n2 && colmap[j] < colmap[best])) {
                best_n2 = n2;
                best = j;
            }
        }
        if (best != k) {
            for (std::size_t i = 0; i < c; ++i) std::swap(x(i, k), x(i, best));
            std::swap(colmap[k], colmap[best]);
        }
        pivots.push_back(colmap[k]);

        // Householder vector for column k, rows k..c-1.
        double norm = std::sqrt(best_n2 < 0.0 ? 0.0 : best_n2);
        std::vector<double> v(c, 0.0);
        if (norm > 0.0) {
            const double x0 = x(k, k);
            const double alpha = (x0 >= 0.0) ? -norm : norm;
            double vnorm2 = 0.0;
            v[k] = x0 - alpha;
            vnorm2 += v[k] * v[k];
            for (std::size_t i = k + 1; i < c; ++i) {
                v[i] = x(i, k);
                vnorm2 += v[i] * v[i];
            }
            if (vnorm2 > 0.0) {
                const double inv = 2.0 / vnorm2;
                for (std::size_t j = k; j < n; ++j) {
                    double dot = 0.0;
                    for (std::size_t i = k; i < c; ++i) dot += v[i] * x(i, j);
                    dot *= inv;
                    for (std::size_t i = k; i < c; ++i) x(i, j) -= dot * v[i];
                }
                x(k, k) = alpha;
                for (std::size_t i = k + 1; i < c; ++i) x(i, k) = 0.0;
            }
        }
        reflectors.push_back(std::move(v));
    }
    // Past the column count every residual is zero; keep selecting the
    // lowest-index unused rows so exactly r pivots come back.
    if (steps < r) {
        std::vector<std::size_t> rest(colmap.begin() + static_cast<std::ptrdiff_t>(steps),
                                      colmap.end());
        std::sort(rest.begin(), rest.end());
        for (std::size_t k = 0; k + steps < r; ++k) pivots.push_back(rest[k]);
    }

    PivotedQrResult out;
    out.pivots = std::move(pivots);
    out.r_factor = Matrix(steps, n);
    for (std::size_t i = 0; i < steps; ++i)
        for (std::size_t j = i; j < n; ++j) out.r_factor(i, j) = x(i, j);

    // q = H_0 ... H_{steps-1} applied to the first `steps` identity columns.
    out.q = Matrix(c, steps);
    for (std::size_t j = 0; j < steps; ++j) out.q(j, j) = 1.0;
    for (std::size_t k = steps; k-- > 0;) {
        const std::vector<double>& v = reflectors[k];
        double vnorm2 = 0.0;
        for (std::size_t i = k; i < c; ++i) vnorm2 += v[i] * v[i];
        if (vnorm2 == 0.0) continue;
        const double inv = 2.0 / vnorm2;
        for (std::size_t j = 0; j < steps; ++j) {
            double dot = 0.0;
            for (std::size_t i = k; i < c; ++i) dot += v[i] * out.q(i, j);
            dot *= inv;
            for (std::size_t i = k; i < c; ++i) out.q(i, j) -= dot * v[i];
        }
    }
    return out;
}

Matrix solve_least_squares(const Matrix& a, const Matrix& b, double condition_limit) {
    const std::size_t m = a.rows();
    const std::size_t n = a.cols();
    if (m < n) throw ArgumentError("solve_least_squares: system is underdetermined");
    if (b.rows() != m) throw ArgumentError("solve_least_squares: rhs row count mismatch");
    const std::size_t k = b.cols();

    // Householder QR of a, reflectors applied to rhs on the fly.
    Matrix qr = a;
    Matrix rhs = b;
    for (std::size_t col = 0; col < n; ++col) {
        double n2 = 0.0;
        for (std::size_t i = col; i < m; ++i) n2 += qr(i, col) * qr(i, col);
        const double norm = std::sqrt(n2);
        if (norm == 0.0) continue;
        const double x0 = qr(col, col);
        const double alpha = (x0 >= 0.0) ? -norm : norm;
        std::vector<double> v(m, 0.0);
        v[col] = x0 - alpha;
        double vnorm2 = v[col] * v[col];
        for (std::size_t i = col + 1; i < m; ++i) {
            v[i] = qr(i, col);
            vnorm2 += v[i] * v[i];
        }
        if (vnorm2 == 0.0) continue;
        const double inv = 2.0 / vnorm2;
        for (std::size_t j = col; j < n; ++j) {
            double dot = 0.0;
            for (std::size_t i = col; i < m; ++i) dot += v[i] * qr(i, j);
            dot *= inv;
            for (std::size_t i = col; i < m; ++i) qr(i, j) -= dot * v[i];
        }
        qr(col, col) = alpha;
        for (std::size_t i = col + 1; i < m; ++i) qr(i, col) = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
            double dot = 0.0;
            for (std::size_t i = col; i < m; ++i) dot += v[i] * rhs(i, j);
            dot *= inv;
            for (std::size_t i = col; i < m; ++i) rhs(i, j) -= dot * v[i];
        }
    }

    // R-diagonal ratio as the condition estimate.
    double dmax = 0.0, dmin = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = std::abs(qr(i, i));
        if (i == 0) {
            dmax = dmin = d;
        } else {
            dmax = std::max(dmax, d);
            dmin = std::min(dmin, d);
        }
    }
    const double cond = (dmin == 0.0) ? std::numeric_limits<double>::infinity() : dmax / dmin;
    if (cond > condition_limit) {
        throw SingularityError("solve_least_squares: system is rank deficient, condition estimate " +
                               std::to_string(cond) + " exceeds " +
                               std::to_string(condition_limit));
    }

    Matrix x(n, k);
    for (std::size_t j = 0; j < k; ++j) {
        for (std::size_t i = n; i-- > 0;) {
            double s = rhs(i, j);
            for (std::size_t l = i + 1; l < n; ++l) s -= qr(i, l) * x(l, j);
            x(i, j) = s / qr(i, i);
        }
    }
    return x;
}

}  // namespace sparsefield
