#pragma once

// Training schemes: full gradient with constant stepsize, the MM quadratic
// step theta <- theta - A(theta)^-1 grad, the factorized-inverse variant
// (Abar), subspace MM (3MG memory-gradient and the one-column varying-
// stepsize reduction), stochastic SG / Momentum / Adam with minibatches, and
// the hybrid warm-up wrapper. run() executes epochs and records a trace.

#include <cctype>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "mmsvm/error.hpp"
#include "mmsvm/linalg.hpp"
#include "mmsvm/majorants.hpp"
#include "mmsvm/objective.hpp"
#include "mmsvm/prng.hpp"

namespace mmsvm {

enum class Method {
    FG,
    MM,
    MMI,
    SUB,
    GRADMM,
    SG,
    MOMENTUM,
    ADAM,
    HYBRID_MM,
    HYBRID_MMI,
    HYBRID_SUB,
};

inline const char* method_name(Method m) {
    switch (m) {
        case Method::FG: return "FG";
        case Method::MM: return "MM";
        case Method::MMI: return "MMI";
        case Method::SUB: return "SUB";
        case Method::GRADMM: return "GRADMM";
        case Method::SG: return "SG";
        case Method::MOMENTUM: return "MOMENTUM";
        case Method::ADAM: return "ADAM";
        case Method::HYBRID_MM: return "H-MM";
        case Method::HYBRID_MMI: return "H-MMI";
        case Method::HYBRID_SUB: return "H-SUB";
    }
    return "?";
}

inline Method method_from_name(std::string name) {
    for (char& c : name) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (name == "fg") return Method::FG;
    if (name == "mm") return Method::MM;
    if (name == "mmi") return Method::MMI;
    if (name == "sub") return Method::SUB;
    if (name == "gradmm") return Method::GRADMM;
    if (name == "sg") return Method::SG;
    if (name == "momentum") return Method::MOMENTUM;
    if (name == "adam") return Method::ADAM;
    if (name == "h-mm" || name == "hmm") return Method::HYBRID_MM;
    if (name == "h-mmi" || name == "hmmi") return Method::HYBRID_MMI;
    if (name == "h-sub" || name == "hsub") return Method::HYBRID_SUB;
    throw ConfigError("unknown method '" + name + "'");
}

inline bool is_hybrid(Method m) {
    return m == Method::HYBRID_MM || m == Method::HYBRID_MMI || m == Method::HYBRID_SUB;
}

inline bool is_stochastic(Method m) {
    return m == Method::SG || m == Method::MOMENTUM || m == Method::ADAM;
}

inline bool is_deterministic(Method m) { return !is_stochastic(m) && !is_hybrid(m); }

// The deterministic scheme a hybrid switches to after the warm-up.
inline Method hybrid_base(Method m) {
    switch (m) {
        case Method::HYBRID_MM: return Method::MM;
        case Method::HYBRID_MMI: return Method::MMI;
        case Method::HYBRID_SUB: return Method::SUB;
        default: return m;
    }
}

struct SolverConfig {
    Method method = Method::MMI;
    double alpha = 0.0;              // stepsize; 0 means "use the default"
    std::size_t max_epochs = 100;
    std::size_t warmup_iota = 10;    // hybrid only
    double momentum_beta = 0.9;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_epshat = 1e-8;
    std::size_t batch_size = 1;
    std::uint64_t seed = 0;
    double epsilon_curv = 1e-4;
    bool fg_alpha_auto = true;       // alpha = 1.9 / mu for FG
};

struct SolverState {
    ParamVector theta;
    DenseVector prev_theta;  // 3MG memory; zeros at start per the theta^(0)=0 convention
    DenseVector m;           // momentum / Adam first moment
    DenseVector v;           // Adam second moment
    std::size_t epoch = 0;
    std::size_t step_count = 0;  // 1-based Adam step counter once incremented
    SplitMix64 rng;

    static SolverState init(const ParamVector& theta0, std::uint64_t seed) {
        SolverState s{theta0,
                      DenseVector(theta0.dim(), 0.0),
                      DenseVector(theta0.dim(), 0.0),
                      DenseVector(theta0.dim(), 0.0),
                      0,
                      0,
                      SplitMix64(seed)};
        return s;
    }
};

struct TraceRecord {
    std::size_t epoch = 0;
    double phi = 0.0;
    double grad_norm = 0.0;       // Euclidean norm of the full gradient
    double seconds = 0.0;         // wall-clock for this epoch
    std::uint64_t sample_grads = 0;  // cumulative per-sample gradient count
};

struct TrainTrace {
    std::vector<TraceRecord> records;

    bool empty() const { return records.empty(); }
    std::size_t size() const { return records.size(); }
    const TraceRecord& back() const { return records.back(); }
};

struct RunResult {
    ParamVector theta;
    TrainTrace trace;
};

namespace detail {

inline void check_finite_grad(const DenseVector& g, Method m, std::size_t epoch) {
    if (!all_finite(g))
        throw DivergenceError(method_name(m), epoch, "non-finite gradient");
}

inline void check_finite_theta(const DenseVector& t, Method m, std::size_t epoch) {
    if (!all_finite(t))
        throw DivergenceError(method_name(m), epoch, "non-finite iterate");
}

inline void mm_step_core(SolverState& s, const ObjectiveContext& ctx,
                         const DenseMatrix& a, Method m) {
    DenseVector g = grad_phi(ctx, s.theta);
    check_finite_grad(g, m, s.epoch);
    DenseVector d = spd_solve(a, g);
    axpy(-1.0, d, s.theta.theta);
    check_finite_theta(s.theta.theta, m, s.epoch);
}

inline void step_mm_with_gram(SolverState& s, const ObjectiveContext& ctx,
                              const DenseMatrix& gram2, double epsilon) {
    mm_step_core(s, ctx, assemble_curvature(gram2, ctx.reg, s.theta, epsilon),
                 Method::MM);
}

// theta <- theta - D (D^T A D)^+ D^T g for the one- or two-column subspace.
template <typename ApplyA>
DenseVector subspace_step_vector(const DenseVector& g, const DenseVector* memory_col,
                                 ApplyA&& apply_a) {
    const std::size_t dim = g.size();
    const std::size_t cols = memory_col ? 2 : 1;

    DenseVector d0(dim);
    for (std::size_t i = 0; i < dim; ++i) d0[i] = -g[i];
    DenseVector a0 = apply_a(d0);

    DenseMatrix gram(cols, cols);
    DenseVector rhs(cols);
    gram(0, 0) = dot(d0, a0);
    rhs[0] = dot(d0, g);
    if (memory_col) {
        DenseVector a1 = apply_a(*memory_col);
        double g01 = dot(d0, a1);
        gram(0, 1) = gram(1, 0) = g01;
        gram(1, 1) = dot(*memory_col, a1);
        rhs[1] = dot(*memory_col, g);
    }
    DenseVector c = small_pinv_solve(gram, rhs);

    DenseVector update(dim, 0.0);
    for (std::size_t i = 0; i < dim; ++i) update[i] = d0[i] * c[0];
    if (memory_col)
        for (std::size_t i = 0; i < dim; ++i) update[i] += (*memory_col)[i] * c[1];
    return update;  // caller subtracts
}

}  // namespace detail

// theta <- theta - alpha grad Phi(theta).
inline void step_fg(SolverState& s, const ObjectiveContext& ctx, double alpha) {
    if (!(alpha > 0.0)) throw ConfigError("step_fg: alpha must be > 0");
    DenseVector g = grad_phi(ctx, s.theta);
    detail::check_finite_grad(g, Method::FG, s.epoch);
    axpy(-alpha, g, s.theta.theta);
    detail::check_finite_theta(s.theta.theta, Method::FG, s.epoch);
}

// Exact MM quadratic step: solve A(theta) d = grad Phi(theta).
inline void step_mm_exact(SolverState& s, const ObjectiveContext& ctx, double epsilon) {
    detail::mm_step_core(s, ctx, curvature_a(ctx, s.theta, epsilon).a, Method::MM);
}

// Factorized-inverse step: sigma = sigma_max(theta), then one O((N+1)^2)
// application of Abar^-1. No linear solve, no refactorization.
inline void step_mm_inversion(SolverState& s, const ObjectiveContext& ctx,
                              const CurvatureFactorization& fact) {
    DenseVector g = grad_phi(ctx, s.theta);
    detail::check_finite_grad(g, Method::MMI, s.epoch);
    double sigma = sigma_max(ctx.reg, s.theta, fact.epsilon);
    DenseVector d = apply_abar_inverse(fact, sigma, g);
    axpy(-1.0, d, s.theta.theta);
    detail::check_finite_theta(s.theta.theta, Method::MMI, s.epoch);
}

// Subspace MM. With memory on, D = [-grad | theta - theta_prev] (3MG); with
// memory off, D = -grad, which is the varying-stepsize gradient scheme.
inline void step_subspace(SolverState& s, const ObjectiveContext& ctx, double epsilon,
                          bool memory) {
    DenseVector g = grad_phi(ctx, s.theta);
    detail::check_finite_grad(g, Method::SUB, s.epoch);

    DenseVector mem;
    const DenseVector* mem_ptr = nullptr;
    if (memory) {
        mem.resize(s.theta.dim());
        for (std::size_t i = 0; i < mem.size(); ++i)
            mem[i] = s.theta.theta[i] - s.prev_theta[i];
        mem_ptr = &mem;
    }
    DenseVector update = detail::subspace_step_vector(
        g, mem_ptr,
        [&](const DenseVector& x) { return apply_curvature(ctx, s.theta, epsilon, x); });

    s.prev_theta = s.theta.theta;
    axpy(-1.0, update, s.theta.theta);
    detail::check_finite_theta(s.theta.theta, Method::SUB, s.epoch);
}

// Varying-stepsize gradient scheme computed by its closed form
// t = g^T g / g^T A g (the one-column subspace step written out).
inline void step_gradmm(SolverState& s, const ObjectiveContext& ctx, double epsilon) {
    DenseVector g = grad_phi(ctx, s.theta);
    detail::check_finite_grad(g, Method::GRADMM, s.epoch);
    double gg = dot(g, g);
    if (gg == 0.0) return;
    DenseVector ag = apply_curvature(ctx, s.theta, epsilon, g);
    double gag = dot(g, ag);
    if (!(gag > 0.0)) return;  // degenerate curvature along g
    axpy(-gg / gag, g, s.theta.theta);
    detail::check_finite_theta(s.theta.theta, Method::GRADMM, s.epoch);
}

namespace detail {

inline void draw_batch(SplitMix64& rng, std::size_t k, std::size_t b,
                       std::vector<std::size_t>& out) {
    out.resize(b);
    for (std::size_t i = 0; i < b; ++i) out[i] = rng.next_index(k);
}

inline void validate_batch(const ObjectiveContext& ctx, std::size_t b) {
    if (b < 1 || b > ctx.num_samples())
        throw ConfigError("batch size must be in [1, K]");
}

}  // namespace detail

// Pure update rules, separated so tests can drive them with synthetic
// gradients.
inline void momentum_update(DenseVector& m, DenseVector& theta, const DenseVector& g,
                            double alpha, double beta) {
    for (std::size_t i = 0; i < m.size(); ++i) {
        m[i] = beta * m[i] + g[i];
        theta[i] -= alpha * m[i];
    }
}

inline void adam_update(DenseVector& m, DenseVector& v, DenseVector& theta,
                        const DenseVector& g, double alpha, double beta1, double beta2,
                        double epshat, std::size_t n) {
    double alpha_n = alpha * std::sqrt(1.0 - std::pow(beta2, static_cast<double>(n))) /
                     (1.0 - std::pow(beta1, static_cast<double>(n)));
    for (std::size_t i = 0; i < m.size(); ++i) {
        m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
        v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
        theta[i] -= alpha_n * m[i] / (std::sqrt(v[i]) + epshat);
    }
}

// One stochastic gradient step on a minibatch drawn with replacement.
inline void step_sg(SolverState& s, const ObjectiveContext& ctx, double alpha,
                    std::size_t batch_size) {
    if (!(alpha > 0.0)) throw ConfigError("step_sg: alpha must be > 0");
    detail::validate_batch(ctx, batch_size);
    std::vector<std::size_t> batch;
    detail::draw_batch(s.rng, ctx.num_samples(), batch_size, batch);
    DenseVector g;
    accumulate_minibatch_grad(ctx, s.theta, batch, g);
    detail::check_finite_grad(g, Method::SG, s.epoch);
    axpy(-alpha, g, s.theta.theta);
    detail::check_finite_theta(s.theta.theta, Method::SG, s.epoch);
}

inline void step_momentum(SolverState& s, const ObjectiveContext& ctx, double alpha,
                          double beta, std::size_t batch_size) {
    if (!(alpha > 0.0)) throw ConfigError("step_momentum: alpha must be > 0");
    if (beta < 0.0 || beta >= 1.0) throw ConfigError("step_momentum: beta must be in [0,1)");
    detail::validate_batch(ctx, batch_size);
    std::vector<std::size_t> batch;
    detail::draw_batch(s.rng, ctx.num_samples(), batch_size, batch);
    DenseVector g;
    accumulate_minibatch_grad(ctx, s.theta, batch, g);
    detail::check_finite_grad(g, Method::MOMENTUM, s.epoch);
    momentum_update(s.m, s.theta.theta, g, alpha, beta);
    detail::check_finite_theta(s.theta.theta, Method::MOMENTUM, s.epoch);
}

inline void step_adam(SolverState& s, const ObjectiveContext& ctx,
                      const SolverConfig& cfg) {
    if (!(cfg.alpha > 0.0)) throw ConfigError("step_adam: alpha must be > 0");
    if (cfg.adam_beta1 < 0.0 || cfg.adam_beta1 >= 1.0 || cfg.adam_beta2 < 0.0 ||
        cfg.adam_beta2 >= 1.0)
        throw ConfigError("step_adam: betas must be in [0,1)");
    if (!(cfg.adam_epshat > 0.0)) throw ConfigError("step_adam: epshat must be > 0");
    detail::validate_batch(ctx, cfg.batch_size);
    std::vector<std::size_t> batch;
    detail::draw_batch(s.rng, ctx.num_samples(), cfg.batch_size, batch);
    DenseVector g;
    accumulate_minibatch_grad(ctx, s.theta, batch, g);
    detail::check_finite_grad(g, Method::ADAM, s.epoch);
    ++s.step_count;
    adam_update(s.m, s.v, s.theta.theta, g, cfg.alpha, cfg.adam_beta1, cfg.adam_beta2,
                cfg.adam_epshat, s.step_count);
    detail::check_finite_theta(s.theta.theta, Method::ADAM, s.epoch);
}

namespace detail {

// Default stepsizes when the caller leaves alpha at 0. Stochastic defaults
// were picked on the bundled benchmark problem; FG always derives its step
// from mu.
inline double default_alpha(Method m) {
    switch (m) {
        case Method::SG: return 3e-3;
        case Method::MOMENTUM: return 3e-4;
        case Method::ADAM:
        case Method::HYBRID_MM:
        case Method::HYBRID_MMI:
        case Method::HYBRID_SUB: return 1e-3;
        default: return 0.0;
    }
}

}  // namespace detail

// Executes cfg.max_epochs epochs from theta0. A deterministic epoch is one
// iteration; a stochastic epoch is ceil(K / B) steps (one full vision of the
// dataset). Hybrids run warmup_iota Adam epochs, then the deterministic base
// method from the warm-start point. Deterministic phases must descend; any
// increase beyond 1e-12 * (1 + |Phi|) aborts.
inline RunResult run(const ObjectiveContext& ctx, const SolverConfig& cfg_in,
                     const ParamVector& theta0) {
    detail::check_dims(ctx, theta0);
    SolverConfig cfg = cfg_in;
    if (cfg.alpha == 0.0) cfg.alpha = detail::default_alpha(cfg.method);

    RunResult out{theta0, {}};
    if (cfg.max_epochs == 0) return out;

    const Method method = cfg.method;
    const bool hybrid = is_hybrid(method);
    const Method base = hybrid_base(method);
    if (hybrid && cfg.warmup_iota >= cfg.max_epochs)
        throw ConfigError("hybrid method requires warmup_iota < max_epochs");
    if (is_stochastic(method) || hybrid) detail::validate_batch(ctx, cfg.batch_size);

    const std::size_t k = ctx.num_samples();
    const std::size_t steps_per_epoch = (k + cfg.batch_size - 1) / cfg.batch_size;

    double fg_alpha = cfg.alpha;
    if (method == Method::FG && (cfg.fg_alpha_auto || cfg.alpha <= 0.0))
        fg_alpha = 1.9 / lipschitz_mu(ctx.design, ctx.reg).mu;

    CurvatureFactorization fact;
    if (base == Method::MMI) fact = factorize(ctx.design, cfg.epsilon_curv);
    DenseMatrix gram2;
    if (base == Method::MM) gram2 = gram_times_two(ctx.design);

    SolverState state = SolverState::init(theta0, cfg.seed);
    const double phi_start = eval_phi(ctx, theta0);
    if (!std::isfinite(phi_start))
        throw DivergenceError(method_name(method), 0, "non-finite initial objective");
    const double divergence_ceiling = 1e3 * (1.0 + phi_start);
    double prev_phi = phi_start;
    std::uint64_t sample_grads = 0;

    for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        state.epoch = epoch;
        const bool warmup_epoch = hybrid && epoch <= cfg.warmup_iota;
        const bool stochastic_epoch = warmup_epoch || is_stochastic(method);
        auto t0 = std::chrono::steady_clock::now();

        if (stochastic_epoch) {
            for (std::size_t step = 0; step < steps_per_epoch; ++step) {
                if (method == Method::SG)
                    step_sg(state, ctx, cfg.alpha, cfg.batch_size);
                else if (method == Method::MOMENTUM)
                    step_momentum(state, ctx, cfg.alpha, cfg.momentum_beta, cfg.batch_size);
                else
                    step_adam(state, ctx, cfg);  // ADAM and every hybrid warm-up
            }
            sample_grads += static_cast<std::uint64_t>(steps_per_epoch) * cfg.batch_size;
        } else {
            if (hybrid && epoch == cfg.warmup_iota + 1)
                state.prev_theta.assign(state.theta.dim(), 0.0);  // fresh 3MG memory
            switch (base) {
                case Method::FG: step_fg(state, ctx, fg_alpha); break;
                case Method::MM: detail::step_mm_with_gram(state, ctx, gram2, cfg.epsilon_curv); break;
                case Method::MMI: step_mm_inversion(state, ctx, fact); break;
                case Method::SUB: step_subspace(state, ctx, cfg.epsilon_curv, true); break;
                case Method::GRADMM: step_gradmm(state, ctx, cfg.epsilon_curv); break;
                default: throw ConfigError("run: unsupported deterministic method");
            }
            sample_grads += k;
        }

        double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        double phi = eval_phi(ctx, state.theta);
        double grad_norm = norm2(grad_phi(ctx, state.theta));
        if (!std::isfinite(phi) || !std::isfinite(grad_norm))
            throw DivergenceError(method_name(method), epoch, "non-finite objective or gradient");
        if (phi > divergence_ceiling)
            throw DivergenceError(method_name(method), epoch,
                                  "objective exceeded 1e3 x (1 + Phi(theta0))");
        if (!stochastic_epoch && phi > prev_phi + 1e-12 * (1.0 + std::abs(prev_phi)))
            throw MonotonicityError(method_name(method), epoch, prev_phi, phi);
        prev_phi = phi;
        out.trace.records.push_back({epoch, phi, grad_norm, seconds, sample_grads});
    }
    out.theta = state.theta;
    return out;
}

// Deterministic run until ||grad||_inf <= tol or max_iters, whichever first.
// Used for reference minima and convergence checks.
struct ToleranceRunResult {
    ParamVector theta;
    std::size_t iterations = 0;
    double grad_inf_norm = 0.0;
    double phi = 0.0;
};

inline ToleranceRunResult run_to_gradient_tol(const ObjectiveContext& ctx, Method method,
                                              double epsilon, const ParamVector& theta0,
                                              double grad_tol, std::size_t max_iters) {
    if (!is_deterministic(method))
        throw ConfigError("run_to_gradient_tol: deterministic methods only");
    detail::check_dims(ctx, theta0);

    DenseMatrix gram2;
    if (method == Method::MM) gram2 = gram_times_two(ctx.design);
    CurvatureFactorization fact;
    if (method == Method::MMI) fact = factorize(ctx.design, epsilon);
    double fg_alpha = 0.0;
    if (method == Method::FG) fg_alpha = 1.9 / lipschitz_mu(ctx.design, ctx.reg).mu;

    SolverState state = SolverState::init(theta0, 0);
    ToleranceRunResult out;
    for (std::size_t it = 0; it < max_iters; ++it) {
        DenseVector g = grad_phi(ctx, state.theta);
        out.grad_inf_norm = norm_inf(g);
        if (!std::isfinite(out.grad_inf_norm))
            throw DivergenceError(method_name(method), it, "non-finite gradient");
        if (out.grad_inf_norm <= grad_tol) break;
        state.epoch = it + 1;
        switch (method) {
            case Method::FG: step_fg(state, ctx, fg_alpha); break;
            case Method::MM: detail::step_mm_with_gram(state, ctx, gram2, epsilon); break;
            case Method::MMI: step_mm_inversion(state, ctx, fact); break;
            case Method::SUB: step_subspace(state, ctx, epsilon, true); break;
            case Method::GRADMM: step_gradmm(state, ctx, epsilon); break;
            default: throw ConfigError("run_to_gradient_tol: unsupported method");
        }
        out.iterations = it + 1;
    }
    out.theta = state.theta;
    out.phi = eval_phi(ctx, out.theta);
    if (!std::isfinite(out.phi))
        throw DivergenceError(method_name(method), out.iterations, "non-finite objective");
    return out;
}

}  // namespace mmsvm
