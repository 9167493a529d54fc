#pragma once

// The training objective Phi(theta) = sum_k rho^2((L theta)_k) + f~(theta),
// its gradient, the per-sample Phi_k / grad Phi_k used by stochastic steps,
// and the three regularizer families (quadratic-only, hyperbolic, Welsh).

#include <cmath>
#include <cstddef>
#include <string>

#include "mmsvm/dataio.hpp"
#include "mmsvm/error.hpp"
#include "mmsvm/linalg.hpp"

namespace mmsvm {

// Squared hinge rho^2(v) = (max{1-v, 0})^2: zero on the correct side of the
// margin, smooth everywhere, 2-Lipschitz gradient.
inline double sq_hinge(double v) {
    double slack = 1.0 - v;
    return slack > 0.0 ? slack * slack : 0.0;
}

inline double sq_hinge_deriv(double v) {
    double slack = 1.0 - v;
    return slack > 0.0 ? -2.0 * slack : 0.0;
}

enum class RegKind { QuadraticOnly, Hyperbolic, Welsh };

inline const char* reg_kind_name(RegKind kind) {
    switch (kind) {
        case RegKind::QuadraticOnly: return "l2";
        case RegKind::Hyperbolic: return "hyperbolic";
        case RegKind::Welsh: return "welsh";
    }
    return "?";
}

inline RegKind reg_kind_from_name(const std::string& name) {
    if (name == "l2" || name == "quadratic") return RegKind::QuadraticOnly;
    if (name == "hyperbolic") return RegKind::Hyperbolic;
    if (name == "welsh") return RegKind::Welsh;
    throw ConfigError("unknown regularizer '" + name + "'");
}

// Potential family phi applied to each weight, plus the ridge term
// (eta/2)||w||^2. The bias is never regularized.
struct Regularizer {
    RegKind kind = RegKind::QuadraticOnly;
    double lambda = 0.0;
    double delta = 0.0;
    double eta = 0.0;

    static Regularizer quadratic_only(double eta) {
        Regularizer r{RegKind::QuadraticOnly, 0.0, 0.0, eta};
        r.validate();
        return r;
    }
    static Regularizer hyperbolic(double lambda, double delta, double eta) {
        Regularizer r{RegKind::Hyperbolic, lambda, delta, eta};
        r.validate();
        return r;
    }
    static Regularizer welsh(double lambda, double delta, double eta) {
        Regularizer r{RegKind::Welsh, lambda, delta, eta};
        r.validate();
        return r;
    }

    void validate() const {
        if (lambda < 0.0) throw ConfigError("regularizer: lambda must be >= 0");
        if (eta < 0.0) throw ConfigError("regularizer: eta must be >= 0");
        if (kind != RegKind::QuadraticOnly && !(delta > 0.0))
            throw ConfigError("regularizer: delta must be > 0 for this potential");
    }

    double potential(double w) const {
        switch (kind) {
            case RegKind::QuadraticOnly: return 0.0;
            case RegKind::Hyperbolic: return lambda * std::sqrt(w * w + delta * delta);
            case RegKind::Welsh:
                return lambda * (1.0 - std::exp(-w * w / (2.0 * delta * delta)));
        }
        return 0.0;
    }

    double potential_deriv(double w) const {
        switch (kind) {
            case RegKind::QuadraticOnly: return 0.0;
            case RegKind::Hyperbolic:
                return lambda * w / std::sqrt(w * w + delta * delta);
            case RegKind::Welsh:
                return lambda * (w / (delta * delta)) *
                       std::exp(-w * w / (2.0 * delta * delta));
        }
        return 0.0;
    }

    // psi(w) = phi'(w)/w in closed form; the formulas below are the limits at
    // w = 0, so the raw quotient is never evaluated.
    double psi(double w) const {
        switch (kind) {
            case RegKind::QuadraticOnly: return 0.0;
            case RegKind::Hyperbolic: return lambda / std::sqrt(w * w + delta * delta);
            case RegKind::Welsh:
                return (lambda / (delta * delta)) *
                       std::exp(-w * w / (2.0 * delta * delta));
        }
        return 0.0;
    }

    // Lipschitz constant of phi': lambda/delta (hyperbolic), lambda/delta^2
    // (Welsh), 0 (quadratic-only).
    double lipschitz_a() const {
        switch (kind) {
            case RegKind::QuadraticOnly: return 0.0;
            case RegKind::Hyperbolic: return lambda / delta;
            case RegKind::Welsh: return lambda / (delta * delta);
        }
        return 0.0;
    }
};

// theta = [w_1 .. w_N, beta].
struct ParamVector {
    DenseVector theta;

    ParamVector() = default;
    explicit ParamVector(DenseVector t) : theta(std::move(t)) {}
    static ParamVector zeros(std::size_t dim) { return ParamVector(DenseVector(dim, 0.0)); }

    std::size_t dim() const { return theta.size(); }
    std::size_t n_weights() const { return theta.empty() ? 0 : theta.size() - 1; }
    double bias() const { return theta.back(); }
};

struct ObjectiveContext {
    const DesignMatrix& design;  // must outlive the context
    Regularizer reg;

    std::size_t num_samples() const { return design.num_samples(); }
    std::size_t dim() const { return design.dim(); }
};

namespace detail {

inline void check_dims(const ObjectiveContext& ctx, const ParamVector& p) {
    if (p.dim() != ctx.dim())
        throw DimensionError("objective: theta length " + std::to_string(p.dim()) +
                             " != design width " + std::to_string(ctx.dim()));
}

// f~(theta) = sum_i phi(w_i) + (eta/2)||w||^2; the bias slot is untouched.
inline double reg_value(const Regularizer& reg, const DenseVector& theta) {
    double s = 0.0, wsq = 0.0;
    for (std::size_t i = 0; i + 1 < theta.size(); ++i) {
        s += reg.potential(theta[i]);
        wsq += theta[i] * theta[i];
    }
    return s + 0.5 * reg.eta * wsq;
}

inline void add_reg_gradient(const Regularizer& reg, const DenseVector& theta,
                             DenseVector& grad) {
    for (std::size_t i = 0; i + 1 < theta.size(); ++i)
        grad[i] += reg.potential_deriv(theta[i]) + reg.eta * theta[i];
}

}  // namespace detail

inline double eval_phi(const ObjectiveContext& ctx, const ParamVector& p) {
    detail::check_dims(ctx, p);
    DenseVector margins = matvec(ctx.design.matrix, p.theta);
    double loss = 0.0;
    for (double v : margins) loss += sq_hinge(v);
    return loss + detail::reg_value(ctx.reg, p.theta);
}

inline DenseVector grad_phi(const ObjectiveContext& ctx, const ParamVector& p) {
    detail::check_dims(ctx, p);
    DenseVector margins = matvec(ctx.design.matrix, p.theta);
    for (double& v : margins) v = sq_hinge_deriv(v);
    DenseVector grad = tmatvec(ctx.design.matrix, margins);
    detail::add_reg_gradient(ctx.reg, p.theta, grad);
    return grad;
}

// Per-sample objective Phi_k = rho^2(L_k^T theta) + f~(theta). Note the full
// regularizer appears in every Phi_k.
inline double eval_phi_k(const ObjectiveContext& ctx, const ParamVector& p,
                         std::size_t k) {
    detail::check_dims(ctx, p);
    if (k >= ctx.num_samples()) throw DimensionError("eval_phi_k: sample index out of range");
    const double* row = ctx.design.matrix.row_ptr(k);
    double margin = 0.0;
    for (std::size_t j = 0; j < ctx.dim(); ++j) margin += row[j] * p.theta[j];
    return sq_hinge(margin) + detail::reg_value(ctx.reg, p.theta);
}

inline DenseVector grad_phi_k(const ObjectiveContext& ctx, const ParamVector& p,
                              std::size_t k) {
    detail::check_dims(ctx, p);
    if (k >= ctx.num_samples()) throw DimensionError("grad_phi_k: sample index out of range");
    const double* row = ctx.design.matrix.row_ptr(k);
    double margin = 0.0;
    for (std::size_t j = 0; j < ctx.dim(); ++j) margin += row[j] * p.theta[j];
    double d = sq_hinge_deriv(margin);
    DenseVector grad(ctx.dim(), 0.0);
    if (d != 0.0)
        for (std::size_t j = 0; j < ctx.dim(); ++j) grad[j] = d * row[j];
    detail::add_reg_gradient(ctx.reg, p.theta, grad);
    return grad;
}

// Accumulates the minibatch average (1/B) sum grad Phi_i into `out`.
inline void accumulate_minibatch_grad(const ObjectiveContext& ctx, const ParamVector& p,
                                      const std::vector<std::size_t>& batch,
                                      DenseVector& out) {
    detail::check_dims(ctx, p);
    out.assign(ctx.dim(), 0.0);
    if (batch.empty()) return;
    for (std::size_t k : batch) {
        if (k >= ctx.num_samples())
            throw DimensionError("minibatch: sample index out of range");
        const double* row = ctx.design.matrix.row_ptr(k);
        double margin = 0.0;
        for (std::size_t j = 0; j < ctx.dim(); ++j) margin += row[j] * p.theta[j];
        double d = sq_hinge_deriv(margin);
        if (d != 0.0)
            for (std::size_t j = 0; j < ctx.dim(); ++j) out[j] += d * row[j];
    }
    double inv = 1.0 / static_cast<double>(batch.size());
    for (double& x : out) x *= inv;
    detail::add_reg_gradient(ctx.reg, p.theta, out);
}

// sign(w^T x + beta) with sign(0) = +1.
inline int predict(const ParamVector& p, const SparseFeatures& x) {
    double s = p.bias();
    for (const FeatureEntry& f : x) {
        if (static_cast<std::size_t>(f.index) > p.n_weights())
            throw DimensionError("predict: feature index exceeds model size");
        s += p.theta[f.index - 1] * f.value;
    }
    return s >= 0.0 ? +1 : -1;
}

}  // namespace mmsvm
