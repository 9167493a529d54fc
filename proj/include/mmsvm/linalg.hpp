#pragma once

// Dense linear-algebra kernels: Householder QR, cyclic Jacobi symmetric
// eigendecomposition, Cholesky SPD solve and a tiny pseudo-inverse solve.
// Everything is deterministic: no pivoting, fixed sweep order, and a fixed
// column-sign convention (first nonzero entry of each orthogonal column is
// nonnegative), so repeated runs produce identical bits.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <vector>

#include "mmsvm/error.hpp"

namespace mmsvm {

using DenseVector = std::vector<double>;

struct DenseMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;  // row-major

    DenseMatrix() = default;
    DenseMatrix(std::size_t r, std::size_t c, double fill = 0.0)
        : rows(r), cols(c), data(r * c, fill) {}

    double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

    const double* row_ptr(std::size_t i) const { return data.data() + i * cols; }
    double* row_ptr(std::size_t i) { return data.data() + i * cols; }

    static DenseMatrix identity(std::size_t n) {
        DenseMatrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }
};

inline bool all_finite(const DenseVector& v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

inline bool all_finite(const DenseMatrix& m) { return all_finite(m.data); }

// ---------------------------------------------------------------------------
// Vector helpers
// ---------------------------------------------------------------------------

inline double dot(const DenseVector& a, const DenseVector& b) {
    if (a.size() != b.size()) throw DimensionError("dot: length mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm2(const DenseVector& v) { return std::sqrt(dot(v, v)); }

inline double norm_inf(const DenseVector& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

// y += alpha * x
inline void axpy(double alpha, const DenseVector& x, DenseVector& y) {
    if (x.size() != y.size()) throw DimensionError("axpy: length mismatch");
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

// ---------------------------------------------------------------------------
// Matrix helpers
// ---------------------------------------------------------------------------

inline DenseMatrix transpose(const DenseMatrix& m) {
    DenseMatrix t(m.cols, m.rows);
    for (std::size_t i = 0; i < m.rows; ++i)
        for (std::size_t j = 0; j < m.cols; ++j) t(j, i) = m(i, j);
    return t;
}

inline DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.cols != b.rows) throw DimensionError("matmul: inner dimensions differ");
    DenseMatrix c(a.rows, b.cols);
    for (std::size_t i = 0; i < a.rows; ++i) {
        for (std::size_t k = 0; k < a.cols; ++k) {
            double aik = a(i, k);
            if (aik == 0.0) continue;
            const double* brow = b.row_ptr(k);
            double* crow = c.row_ptr(i);
            for (std::size_t j = 0; j < b.cols; ++j) crow[j] += aik * brow[j];
        }
    }
    return c;
}

inline DenseVector matvec(const DenseMatrix& m, const DenseVector& x) {
    if (m.cols != x.size()) throw DimensionError("matvec: dimension mismatch");
    DenseVector y(m.rows, 0.0);
    for (std::size_t i = 0; i < m.rows; ++i) {
        const double* row = m.row_ptr(i);
        double s = 0.0;
        for (std::size_t j = 0; j < m.cols; ++j) s += row[j] * x[j];
        y[i] = s;
    }
    return y;
}

// m^T x without forming the transpose.
inline DenseVector tmatvec(const DenseMatrix& m, const DenseVector& x) {
    if (m.rows != x.size()) throw DimensionError("tmatvec: dimension mismatch");
    DenseVector y(m.cols, 0.0);
    for (std::size_t i = 0; i < m.rows; ++i) {
        double xi = x[i];
        if (xi == 0.0) continue;
        const double* row = m.row_ptr(i);
        for (std::size_t j = 0; j < m.cols; ++j) y[j] += row[j] * xi;
    }
    return y;
}

inline double frobenius_norm(const DenseMatrix& m) {
    double s = 0.0;
    for (double x : m.data) s += x * x;
    return std::sqrt(s);
}

inline double max_abs(const DenseMatrix& m) {
    double s = 0.0;
    for (double x : m.data) s = std::max(s, std::abs(x));
    return s;
}

namespace detail {

// Flip the sign of column j of q (and row j of r, when present) so the first
// nonzero entry of the column is nonnegative.
inline void normalize_column_signs(DenseMatrix& q, DenseMatrix* r) {
    for (std::size_t j = 0; j < q.cols; ++j) {
        double lead = 0.0;
        for (std::size_t i = 0; i < q.rows; ++i) {
            if (q(i, j) != 0.0) {
                lead = q(i, j);
                break;
            }
        }
        if (lead >= 0.0) continue;
        for (std::size_t i = 0; i < q.rows; ++i) q(i, j) = -q(i, j);
        if (r != nullptr && j < r->rows)
            for (std::size_t k = 0; k < r->cols; ++k) (*r)(j, k) = -(*r)(j, k);
    }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// QR factorization (Householder reflections)
// ---------------------------------------------------------------------------

enum class QrMode { Full, Thin };

struct QrResult {
    DenseMatrix q;
    DenseMatrix r;
};

// Full mode: q is rows x rows orthogonal, r is rows x cols upper trapezoidal.
// Thin mode (rows > cols): q is rows x cols with orthonormal columns and r is
// cols x cols upper triangular. Column signs follow the library convention.
inline QrResult qr_factorize(const DenseMatrix& m, QrMode mode = QrMode::Full) {
    if (m.rows == 0 || m.cols == 0) throw DimensionError("qr_factorize: empty matrix");
    if (!all_finite(m)) throw NonFiniteError("qr_factorize: non-finite entries");

    const std::size_t rows = m.rows, cols = m.cols;
    DenseMatrix r = m;
    DenseMatrix q = DenseMatrix::identity(rows);
    const std::size_t steps = std::min(rows > 0 ? rows - 1 : 0, cols);

    DenseVector v(rows);
    for (std::size_t k = 0; k < steps; ++k) {
        double norm_sq = 0.0;
        for (std::size_t i = k; i < rows; ++i) {
            v[i] = r(i, k);
            norm_sq += v[i] * v[i];
        }
        double norm = std::sqrt(norm_sq);
        if (norm == 0.0) continue;  // column already zero below the diagonal

        double sigma = (v[k] >= 0.0) ? norm : -norm;
        v[k] += sigma;
        double beta = 1.0 / (sigma * v[k]);  // 2 / v^T v for this construction

        // r[k:, k:] -= beta * v (v^T r[k:, k:])
        for (std::size_t j = k; j < cols; ++j) {
            double s = 0.0;
            for (std::size_t i = k; i < rows; ++i) s += v[i] * r(i, j);
            s *= beta;
            for (std::size_t i = k; i < rows; ++i) r(i, j) -= s * v[i];
        }
        // q[:, k:] -= beta * (q[:, k:] v) v^T
        for (std::size_t i = 0; i < rows; ++i) {
            double s = 0.0;
            for (std::size_t j = k; j < rows; ++j) s += q(i, j) * v[j];
            s *= beta;
            for (std::size_t j = k; j < rows; ++j) q(i, j) -= s * v[j];
        }
    }

    // Zero out the subdiagonal explicitly so R is exactly trapezoidal.
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < std::min(i, cols); ++j) r(i, j) = 0.0;

    detail::normalize_column_signs(q, &r);

    if (mode == QrMode::Thin && rows > cols) {
        DenseMatrix q_thin(rows, cols);
        for (std::size_t i = 0; i < rows; ++i)
            for (std::size_t j = 0; j < cols; ++j) q_thin(i, j) = q(i, j);
        DenseMatrix r_thin(cols, cols);
        for (std::size_t i = 0; i < cols; ++i)
            for (std::size_t j = 0; j < cols; ++j) r_thin(i, j) = r(i, j);
        return {std::move(q_thin), std::move(r_thin)};
    }
    return {std::move(q), std::move(r)};
}

// ---------------------------------------------------------------------------
// Symmetric eigendecomposition (cyclic Jacobi)
// ---------------------------------------------------------------------------

struct SymmetricEigen {
    DenseMatrix eigenvectors;  // orthonormal columns
    DenseVector eigenvalues;   // descending, ties keep original index order
};

namespace detail {

inline double off_diagonal_norm(const DenseMatrix& a) {
    double s = 0.0;
    for (std::size_t p = 0; p < a.rows; ++p)
        for (std::size_t q = p + 1; q < a.cols; ++q) s += a(p, q) * a(p, q);
    return std::sqrt(2.0 * s);
}

}  // namespace detail

inline SymmetricEigen sym_eigen(const DenseMatrix& m) {
    if (m.rows != m.cols) throw DimensionError("sym_eigen: matrix not square");
    if (!all_finite(m)) throw NonFiniteError("sym_eigen: non-finite entries");
    const std::size_t n = m.rows;

    double scale = max_abs(m);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (std::abs(m(i, j) - m(j, i)) > 1e-10 * std::max(scale, 1e-300))
                throw NotSymmetricError("sym_eigen: matrix not symmetric");

    DenseMatrix a = m;
    // Symmetrize exactly so roundoff in the input cannot skew the sweeps.
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            double v = 0.5 * (a(i, j) + a(j, i));
            a(i, j) = a(j, i) = v;
        }

    DenseMatrix v = DenseMatrix::identity(n);
    const double frob = frobenius_norm(a);
    const double tol = 1e-15 * std::max(frob, 1e-300);
    const int max_sweeps = 64;

    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        if (detail::off_diagonal_norm(a) <= tol) break;
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                double apq = a(p, q);
                if (apq == 0.0) continue;
                double tau = (a(q, q) - a(p, p)) / (2.0 * apq);
                double t = (tau >= 0.0) ? 1.0 / (tau + std::sqrt(1.0 + tau * tau))
                                        : 1.0 / (tau - std::sqrt(1.0 + tau * tau));
                double c = 1.0 / std::sqrt(1.0 + t * t);
                double s = t * c;

                double app = a(p, p), aqq = a(q, q);
                a(p, p) = app - t * apq;
                a(q, q) = aqq + t * apq;
                a(p, q) = a(q, p) = 0.0;
                for (std::size_t i = 0; i < n; ++i) {
                    if (i == p || i == q) continue;
                    double aip = a(i, p), aiq = a(i, q);
                    a(i, p) = a(p, i) = c * aip - s * aiq;
                    a(i, q) = a(q, i) = s * aip + c * aiq;
                }
                for (std::size_t i = 0; i < n; ++i) {
                    double vip = v(i, p), viq = v(i, q);
                    v(i, p) = c * vip - s * viq;
                    v(i, q) = s * vip + c * viq;
                }
            }
        }
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t i, std::size_t j) { return a(i, i) > a(j, j); });

    SymmetricEigen out;
    out.eigenvalues.resize(n);
    out.eigenvectors = DenseMatrix(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        out.eigenvalues[j] = a(order[j], order[j]);
        for (std::size_t i = 0; i < n; ++i) out.eigenvectors(i, j) = v(i, order[j]);
    }
    detail::normalize_column_signs(out.eigenvectors, nullptr);
    return out;
}

// ---------------------------------------------------------------------------
// SPD solve (Cholesky, no pivoting)
// ---------------------------------------------------------------------------

inline DenseVector spd_solve(const DenseMatrix& a, const DenseVector& b) {
    if (a.rows != a.cols) throw DimensionError("spd_solve: matrix not square");
    if (a.rows != b.size()) throw DimensionError("spd_solve: rhs length mismatch");
    const std::size_t n = a.rows;

    double scale = max_abs(a);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (std::abs(a(i, j) - a(j, i)) > 1e-10 * std::max(scale, 1e-300))
                throw NotSymmetricError("spd_solve: matrix not symmetric");

    // Lower-triangular Cholesky factor, stored densely.
    DenseMatrix l(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        double d = a(j, j);
        for (std::size_t k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
        if (!(d > 0.0))
            throw NotPositiveDefiniteError("spd_solve: leading minor " +
                                           std::to_string(j + 1) + " not positive");
        l(j, j) = std::sqrt(d);
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = a(i, j);
            for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
            l(i, j) = s / l(j, j);
        }
    }

    DenseVector y(n);
    for (std::size_t i = 0; i < n; ++i) {
        double s = b[i];
        for (std::size_t k = 0; k < i; ++k) s -= l(i, k) * y[k];
        y[i] = s / l(i, i);
    }
    DenseVector x(n);
    for (std::size_t ii = n; ii > 0; --ii) {
        std::size_t i = ii - 1;
        double s = y[i];
        for (std::size_t k = i + 1; k < n; ++k) s -= l(k, i) * x[k];
        x[i] = s / l(i, i);
    }
    return x;
}

// ---------------------------------------------------------------------------
// Tiny pseudo-inverse solve (subspace Gram systems, size 1 or 2)
// ---------------------------------------------------------------------------

// Returns g^+ b via eigendecomposition. Eigenvalues below
// 1e-12 * (largest eigenvalue, or 1 when all are zero) are treated as zero,
// so rank-deficient Gram matrices degrade to the minimum-norm solution.
inline DenseVector small_pinv_solve(const DenseMatrix& g, const DenseVector& b) {
    if (g.rows != g.cols) throw DimensionError("small_pinv_solve: matrix not square");
    if (g.rows == 0 || g.rows > 2)
        throw DimensionError("small_pinv_solve: size must be 1 or 2");
    if (g.rows != b.size()) throw DimensionError("small_pinv_solve: rhs length mismatch");

    SymmetricEigen eig = sym_eigen(g);
    double lambda_max = eig.eigenvalues.empty() ? 0.0 : eig.eigenvalues[0];
    double cutoff = 1e-12 * (lambda_max > 0.0 ? lambda_max : 1.0);

    const std::size_t n = g.rows;
    DenseVector t(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        if (eig.eigenvalues[j] < cutoff) continue;
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += eig.eigenvectors(i, j) * b[i];
        t[j] = s / eig.eigenvalues[j];
    }
    DenseVector x(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) x[i] += eig.eigenvectors(i, j) * t[j];
    return x;
}

}  // namespace mmsvm
