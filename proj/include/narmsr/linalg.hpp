#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "narmsr/errors.hpp"

namespace narmsr {

/// Row-major dense matrix, just big enough for the small systems this
/// library solves (AR weight systems, PCA covariances).
struct DenseMatrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> a;

    DenseMatrix() = default;
    DenseMatrix(int r, int c, double fill = 0.0) : rows(r), cols(c), a(static_cast<std::size_t>(r) * c, fill) {}

    double& operator()(int r, int c) { return a[static_cast<std::size_t>(r) * cols + c]; }
    double operator()(int r, int c) const { return a[static_cast<std::size_t>(r) * cols + c]; }
};

/// Solve M w = b for symmetric positive definite M by Cholesky.
/// Throws numerical_error if a pivot collapses (semidefinite / singular M).
inline std::vector<double> solve_spd(DenseMatrix m, std::vector<double> b) {
    const int n = m.rows;
    if (m.cols != n || static_cast<int>(b.size()) != n)
        throw std::invalid_argument("solve_spd: dimension mismatch");
    double max_diag = 0.0;
    for (int i = 0; i < n; ++i) max_diag = std::max(max_diag, std::abs(m(i, i)));
    const double tiny = 1e-13 * std::max(max_diag, 1e-300);

    // in-place lower Cholesky
    for (int j = 0; j < n; ++j) {
        double d = m(j, j);
        for (int k = 0; k < j; ++k) d -= m(j, k) * m(j, k);
        if (d <= tiny)
            throw numerical_error(
                "solve_spd: matrix is singular or indefinite; add ridge regularization (gamma > 0)");
        const double ljj = std::sqrt(d);
        m(j, j) = ljj;
        for (int i = j + 1; i < n; ++i) {
            double s = m(i, j);
            for (int k = 0; k < j; ++k) s -= m(i, k) * m(j, k);
            m(i, j) = s / ljj;
        }
    }
    // forward then backward substitution
    for (int i = 0; i < n; ++i) {
        double s = b[i];
        for (int k = 0; k < i; ++k) s -= m(i, k) * b[k];
        b[i] = s / m(i, i);
    }
    for (int i = n - 1; i >= 0; --i) {
        double s = b[i];
        for (int k = i + 1; k < n; ++k) s -= m(k, i) * b[k];
        b[i] = s / m(i, i);
    }
    return b;
}

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
/// Returns eigenvalues in descending order with matching eigenvectors
/// (rows of `vectors`).
struct SymEigen {
    std::vector<double> values;
    DenseMatrix vectors;  // row i is the eigenvector for values[i]
};

inline SymEigen sym_eigen(DenseMatrix m, int max_sweeps = 50) {
    const int n = m.rows;
    if (m.cols != n) throw std::invalid_argument("sym_eigen: matrix must be square");
    DenseMatrix v(n, n, 0.0);
    for (int i = 0; i < n; ++i) v(i, i) = 1.0;

    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double off = 0.0;
        for (int p = 0; p < n; ++p)
            for (int q = p + 1; q < n; ++q) off += m(p, q) * m(p, q);
        if (off < 1e-30) break;
        for (int p = 0; p < n; ++p) {
            for (int q = p + 1; q < n; ++q) {
                const double apq = m(p, q);
                if (std::abs(apq) < 1e-300) continue;
                const double theta = (m(q, q) - m(p, p)) / (2.0 * apq);
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (int k = 0; k < n; ++k) {
                    const double mkp = m(k, p), mkq = m(k, q);
                    m(k, p) = c * mkp - s * mkq;
                    m(k, q) = s * mkp + c * mkq;
                }
                for (int k = 0; k < n; ++k) {
                    const double mpk = m(p, k), mqk = m(q, k);
                    m(p, k) = c * mpk - s * mqk;
                    m(q, k) = s * mpk + c * mqk;
                }
                for (int k = 0; k < n; ++k) {
                    const double vpk = v(p, k), vqk = v(q, k);
                    v(p, k) = c * vpk - s * vqk;
                    v(q, k) = s * vpk + c * vqk;
                }
            }
        }
    }

    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    std::vector<double> diag(n);
    for (int i = 0; i < n; ++i) diag[i] = m(i, i);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (diag[a] != diag[b]) return diag[a] > diag[b];
        return a < b;
    });

    SymEigen out;
    out.values.resize(n);
    out.vectors = DenseMatrix(n, n);
    for (int i = 0; i < n; ++i) {
        out.values[i] = diag[order[i]];
        for (int k = 0; k < n; ++k) out.vectors(i, k) = v(order[i], k);
    }
    return out;
}

}  // namespace narmsr
