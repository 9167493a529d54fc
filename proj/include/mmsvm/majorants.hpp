#pragma once

// Majorant machinery: the descent-lemma constant mu = 2||L||^2 + a + eta, the
// half-quadratic curvature A(theta) = 2 L^T L + Diag(psi(w_i)+eta, ..., eps),
// the diagonal-plus-Gram majorant Abar(theta) = 2 L^T L + sigma_max(theta) I,
// and its one-time factorized inverse P (2 Lambda + sigma I)^-1 P^T obtained
// from L^T = QR and the spectral decomposition of R R^T.

#include <algorithm>
#include <cmath>
#include <cstddef>

#include "mmsvm/dataio.hpp"
#include "mmsvm/error.hpp"
#include "mmsvm/linalg.hpp"
#include "mmsvm/objective.hpp"

namespace mmsvm {

struct LipschitzBound {
    double mu = 0.0;
    double spectral_norm_sq = 0.0;  // ||L||^2
    double a = 0.0;                 // regularizer Lipschitz constant
    double eta = 0.0;
};

// Orthogonal P and eigenvalues Lambda of R R^T (zero-padded in thin mode),
// letting Abar(theta)^-1 apply in O((N+1)^2) per call.
struct CurvatureFactorization {
    DenseMatrix p;           // (N+1) x (N+1), orthogonal
    DenseVector gram_eigs;   // length N+1, nonnegative, descending then zeros
    double epsilon = 0.0;
};

struct CurvatureMatrix {
    DenseMatrix a;  // (N+1) x (N+1), symmetric
};

// 2 L^T L, exploiting symmetry.
inline DenseMatrix gram_times_two(const DesignMatrix& design) {
    const DenseMatrix& l = design.matrix;
    DenseMatrix g(l.cols, l.cols);
    for (std::size_t k = 0; k < l.rows; ++k) {
        const double* row = l.row_ptr(k);
        for (std::size_t i = 0; i < l.cols; ++i) {
            double li = row[i];
            if (li == 0.0) continue;
            double* grow = g.row_ptr(i);
            for (std::size_t j = i; j < l.cols; ++j) grow[j] += li * row[j];
        }
    }
    for (std::size_t i = 0; i < g.rows; ++i)
        for (std::size_t j = i; j < g.cols; ++j) {
            double v = 2.0 * g(i, j);
            g(i, j) = v;
            g(j, i) = v;
        }
    return g;
}

namespace detail {

// Diagonal of A(theta) - 2 L^T L: psi(w_i) + eta on the weight slots,
// epsilon on the bias slot.
inline DenseVector curvature_diagonal(const Regularizer& reg, const ParamVector& p,
                                      double epsilon) {
    DenseVector d(p.dim());
    for (std::size_t i = 0; i + 1 < p.dim(); ++i) d[i] = reg.psi(p.theta[i]) + reg.eta;
    d[p.dim() - 1] = epsilon;
    return d;
}

inline DenseMatrix assemble_curvature(const DenseMatrix& gram2, const Regularizer& reg,
                                      const ParamVector& p, double epsilon) {
    DenseMatrix a = gram2;
    DenseVector diag = curvature_diagonal(reg, p, epsilon);
    for (std::size_t i = 0; i < a.rows; ++i) a(i, i) += diag[i];
    return a;
}

}  // namespace detail

inline CurvatureMatrix curvature_a(const ObjectiveContext& ctx, const ParamVector& p,
                                   double epsilon) {
    if (!(epsilon > 0.0)) throw ConfigError("curvature_a: epsilon must be > 0");
    detail::check_dims(ctx, p);
    return {detail::assemble_curvature(gram_times_two(ctx.design), ctx.reg, p, epsilon)};
}

// A(theta) x without assembling A: 2 L^T (L x) + diag .* x.
inline DenseVector apply_curvature(const ObjectiveContext& ctx, const ParamVector& at,
                                   double epsilon, const DenseVector& x) {
    if (x.size() != ctx.dim()) throw DimensionError("apply_curvature: length mismatch");
    DenseVector lx = matvec(ctx.design.matrix, x);
    DenseVector out = tmatvec(ctx.design.matrix, lx);
    for (double& v : out) v *= 2.0;
    DenseVector diag = detail::curvature_diagonal(ctx.reg, at, epsilon);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += diag[i] * x[i];
    return out;
}

// One-time, theta-independent factorization of the Gram part. Thin mode
// (K < N+1) eigendecomposes the small K x K matrix R R^T and completes P with
// the orthogonal complement of Q; the padded eigenvalues are zero.
inline CurvatureFactorization factorize(const DesignMatrix& design, double epsilon) {
    if (!(epsilon > 0.0)) throw ConfigError("factorize: epsilon must be > 0");
    DenseMatrix lt = transpose(design.matrix);
    const std::size_t dim = lt.rows;  // N+1
    const std::size_t k = lt.cols;    // samples

    QrResult qr = qr_factorize(lt, QrMode::Full);
    CurvatureFactorization fact;
    fact.epsilon = epsilon;

    if (k >= dim) {
        DenseMatrix g = matmul(qr.r, transpose(qr.r));
        for (std::size_t i = 0; i < dim; ++i)
            for (std::size_t j = i + 1; j < dim; ++j) {
                double v = 0.5 * (g(i, j) + g(j, i));
                g(i, j) = g(j, i) = v;
            }
        SymmetricEigen eig = sym_eigen(g);
        fact.p = matmul(qr.q, eig.eigenvectors);
        fact.gram_eigs = std::move(eig.eigenvalues);
    } else {
        DenseMatrix rsmall(k, k);
        for (std::size_t i = 0; i < k; ++i)
            for (std::size_t j = 0; j < k; ++j) rsmall(i, j) = qr.r(i, j);
        DenseMatrix g = matmul(rsmall, transpose(rsmall));
        for (std::size_t i = 0; i < k; ++i)
            for (std::size_t j = i + 1; j < k; ++j) {
                double v = 0.5 * (g(i, j) + g(j, i));
                g(i, j) = g(j, i) = v;
            }
        SymmetricEigen eig = sym_eigen(g);
        fact.p = DenseMatrix(dim, dim);
        for (std::size_t i = 0; i < dim; ++i) {
            for (std::size_t j = 0; j < k; ++j) {
                double s = 0.0;
                for (std::size_t m = 0; m < k; ++m) s += qr.q(i, m) * eig.eigenvectors(m, j);
                fact.p(i, j) = s;
            }
            for (std::size_t j = k; j < dim; ++j) fact.p(i, j) = qr.q(i, j);
        }
        fact.gram_eigs.assign(dim, 0.0);
        for (std::size_t j = 0; j < k; ++j) fact.gram_eigs[j] = eig.eigenvalues[j];
    }
    // R R^T is PSD by construction; round-off negatives are clamped.
    for (double& v : fact.gram_eigs) v = std::max(v, 0.0);
    return fact;
}

// sigma_max(theta) = max{psi(w_1)+eta, ..., psi(w_N)+eta, epsilon}.
inline double sigma_max(const Regularizer& reg, const ParamVector& p, double epsilon) {
    if (!(epsilon > 0.0)) throw ConfigError("sigma_max: epsilon must be > 0");
    double m = epsilon;
    for (std::size_t i = 0; i + 1 < p.dim(); ++i)
        m = std::max(m, reg.psi(p.theta[i]) + reg.eta);
    return m;
}

// P Diag(1 / (2 lambda_i + sigma)) P^T b; O((N+1)^2), no refactorization.
inline DenseVector apply_abar_inverse(const CurvatureFactorization& fact, double sigma,
                                      const DenseVector& b) {
    if (!(sigma > 0.0)) throw ConfigError("apply_abar_inverse: sigma must be > 0");
    if (b.size() != fact.p.rows)
        throw DimensionError("apply_abar_inverse: length mismatch");
    DenseVector t = tmatvec(fact.p, b);
    for (std::size_t i = 0; i < t.size(); ++i) t[i] /= (2.0 * fact.gram_eigs[i] + sigma);
    return matvec(fact.p, t);
}

// mu = 2 ||L||^2 + a + eta, with ||L||^2 the top eigenvalue of R R^T.
inline LipschitzBound lipschitz_mu(const CurvatureFactorization& fact,
                                   const Regularizer& reg) {
    LipschitzBound out;
    out.spectral_norm_sq = fact.gram_eigs.empty() ? 0.0 : fact.gram_eigs[0];
    out.a = reg.lipschitz_a();
    out.eta = reg.eta;
    out.mu = 2.0 * out.spectral_norm_sq + out.a + out.eta;
    return out;
}

inline LipschitzBound lipschitz_mu(const DesignMatrix& design, const Regularizer& reg) {
    return lipschitz_mu(factorize(design, 1.0), reg);
}

// Half-quadratic tangent majorant value at x around `at`; diagnostics only.
inline double hq_majorant_value(const ObjectiveContext& ctx, const ParamVector& at,
                                const ParamVector& x, double epsilon) {
    detail::check_dims(ctx, at);
    detail::check_dims(ctx, x);
    DenseVector d(x.dim());
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = x.theta[i] - at.theta[i];
    DenseVector g = grad_phi(ctx, at);
    DenseVector ad = apply_curvature(ctx, at, epsilon, d);
    return eval_phi(ctx, at) + dot(g, d) + 0.5 * dot(d, ad);
}

// Descent-lemma majorant with constant curvature mu * I.
inline double descent_majorant_value(const ObjectiveContext& ctx, const ParamVector& at,
                                     const ParamVector& x, double mu) {
    detail::check_dims(ctx, at);
    detail::check_dims(ctx, x);
    DenseVector d(x.dim());
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = x.theta[i] - at.theta[i];
    DenseVector g = grad_phi(ctx, at);
    return eval_phi(ctx, at) + dot(g, d) + 0.5 * mu * dot(d, d);
}

}  // namespace mmsvm
