#pragma once

// Classification metrics on a held-out set, weight-sparsity counting, and
// optimality-gap series against a long-run reference minimum.

#include <cmath>
#include <cstddef>
#include <optional>
#include <vector>

#include "mmsvm/dataio.hpp"
#include "mmsvm/error.hpp"
#include "mmsvm/objective.hpp"
#include "mmsvm/solvers.hpp"

namespace mmsvm {

struct ConfusionCounts {
    std::size_t tp = 0, tn = 0, fp = 0, fn = 0;

    std::size_t total() const { return tp + tn + fp + fn; }
};

// Metrics are empty optionals when their denominator is zero; they serialize
// as the literal text "undefined", never NaN.
struct MetricReport {
    std::optional<double> accuracy;
    std::optional<double> precision;
    std::optional<double> recall;
    std::optional<double> f1;
    std::size_t sparsity_count = 0;
    std::size_t sparsity_total = 0;
};

inline ConfusionCounts confusion(const ParamVector& model, const Dataset& test) {
    if (test.samples.empty()) throw ConfigError("confusion: empty test set");
    ConfusionCounts c;
    for (const Sample& s : test.samples) {
        int pred = predict(model, s.features);
        if (pred > 0)
            (s.label > 0 ? c.tp : c.fp)++;
        else
            (s.label > 0 ? c.fn : c.tn)++;
    }
    return c;
}

inline MetricReport report(const ConfusionCounts& c, std::size_t n_test,
                           const ParamVector& model, double sparsity_tau) {
    MetricReport r;
    auto tp = static_cast<double>(c.tp);
    if (n_test > 0) r.accuracy = (tp + static_cast<double>(c.tn)) / static_cast<double>(n_test);
    if (c.tp + c.fp > 0) r.precision = tp / static_cast<double>(c.tp + c.fp);
    if (c.tp + c.fn > 0) r.recall = tp / static_cast<double>(c.tp + c.fn);
    double f1_denom = tp + static_cast<double>(c.fn + c.fp) / 2.0;
    if (f1_denom > 0.0) r.f1 = tp / f1_denom;

    r.sparsity_total = model.n_weights();
    for (std::size_t i = 0; i < model.n_weights(); ++i)
        if (std::abs(model.theta[i]) <= sparsity_tau) ++r.sparsity_count;
    return r;
}

struct ReferenceMinimum {
    double phi_star = 0.0;
    Method produced_by = Method::MM;
    double gradient_norm_at_star = 0.0;  // infinity norm
    std::size_t iterations = 0;
};

// Long exact-MM run from zero: stop at ||grad||_inf <= 1e-10 or 5000
// iterations, whichever comes first.
inline ReferenceMinimum compute_reference_minimum(const ObjectiveContext& ctx,
                                                  double epsilon,
                                                  std::size_t max_iters = 5000,
                                                  double grad_tol = 1e-10) {
    ToleranceRunResult r = run_to_gradient_tol(ctx, Method::MM, epsilon,
                                               ParamVector::zeros(ctx.dim()), grad_tol,
                                               max_iters);
    return {r.phi, Method::MM, r.grad_inf_norm, r.iterations};
}

// Raw per-epoch gaps Phi^(n) - phi*. Values can go slightly negative when a
// method beats the reference; clamp_gap_for_log floors them for log plots
// while the raw series stays in the data outputs.
inline std::vector<double> optimality_gap(const TrainTrace& trace,
                                          const ReferenceMinimum& ref) {
    if (trace.empty()) throw ConfigError("optimality_gap: empty trace");
    std::vector<double> gaps;
    gaps.reserve(trace.size());
    for (const TraceRecord& rec : trace.records) gaps.push_back(rec.phi - ref.phi_star);
    return gaps;
}

inline double clamp_gap_for_log(double gap) { return gap > 1e-16 ? gap : 1e-16; }

}  // namespace mmsvm
