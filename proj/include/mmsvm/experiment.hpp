#pragma once

// Experiment orchestration behind the CLI: configuration resolution with the
// standard hyperparameter defaults per regularizer family, the train, refmin,
// benchmark and evaluate commands, and the text formats (run record, model,
// reference minimum, trace and summary CSV).

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "mmsvm/dataio.hpp"
#include "mmsvm/error.hpp"
#include "mmsvm/metrics.hpp"
#include "mmsvm/objective.hpp"
#include "mmsvm/solvers.hpp"

namespace mmsvm {

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// NaN marks "not set on the command line"; resolution fills the documented
// default for the chosen regularizer kind.
struct ExperimentConfig {
    std::string data_path;
    std::string test_data_path;            // empty: carve the test set out of data
    double split_fraction = 0.8;
    std::uint64_t seed = 0;
    int num_features_override = 0;         // 0: use the max index seen

    RegKind reg_kind = RegKind::Hyperbolic;
    double lambda = std::nan("");          // default 1e-4 (0 for l2-only)
    double delta = std::nan("");           // default 1e-4 (0 for l2-only)
    double eta = std::nan("");             // default 0    (1e-4 for l2-only)

    Method method = Method::HYBRID_MMI;
    double alpha = std::nan("");           // default per method
    std::size_t epochs = 100;
    std::size_t iota = 10;
    std::size_t batch = 1;
    double eps_curv = 1e-4;
    double momentum_beta = 0.9;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_epshat = 1e-8;

    double sparsity_tau = 1e-4;
    std::string refmin_path;               // adds a gap column when present
    std::string out_dir = ".";
    std::string model_path;                // evaluate only

    std::vector<Method> bench_methods;     // benchmark; empty = the standard seven
    std::vector<RegKind> bench_regs;       // benchmark; empty = all three
    std::vector<double> bench_lambdas;     // benchmark; optional lambda sweep
};

// eta = 1e-4 with lambda = delta = 0 for the plain l2 penalty; lambda =
// delta = 1e-4 with eta = 0 for the sparsity-promoting potentials.
inline Regularizer resolve_regularizer(RegKind kind, double lambda, double delta,
                                       double eta) {
    if (kind == RegKind::QuadraticOnly) {
        if (!std::isnan(lambda) && lambda != 0.0)
            throw ConfigError("l2-only regularizer does not take lambda");
        if (!std::isnan(delta) && delta != 0.0)
            throw ConfigError("l2-only regularizer does not take delta");
        return Regularizer::quadratic_only(std::isnan(eta) ? 1e-4 : eta);
    }
    double l = std::isnan(lambda) ? 1e-4 : lambda;
    double d = std::isnan(delta) ? 1e-4 : delta;
    double e = std::isnan(eta) ? 0.0 : eta;
    return kind == RegKind::Hyperbolic ? Regularizer::hyperbolic(l, d, e)
                                       : Regularizer::welsh(l, d, e);
}

inline SolverConfig solver_config_from(const ExperimentConfig& cfg) {
    SolverConfig sc;
    sc.method = cfg.method;
    sc.alpha = std::isnan(cfg.alpha) ? 0.0 : cfg.alpha;
    sc.fg_alpha_auto = std::isnan(cfg.alpha);
    sc.max_epochs = cfg.epochs;
    sc.warmup_iota = cfg.iota;
    sc.momentum_beta = cfg.momentum_beta;
    sc.adam_beta1 = cfg.adam_beta1;
    sc.adam_beta2 = cfg.adam_beta2;
    sc.adam_epshat = cfg.adam_epshat;
    sc.batch_size = cfg.batch;
    sc.seed = cfg.seed;
    sc.epsilon_curv = cfg.eps_curv;
    return sc;
}

// ---------------------------------------------------------------------------
// Files
// ---------------------------------------------------------------------------

inline Dataset load_dataset_file(const std::string& path, int num_features_override) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open dataset file '" + path + "'");
    Dataset ds = parse_libsvm(in, std::filesystem::path(path).filename().string());
    if (num_features_override > 0) {
        if (num_features_override < ds.num_features)
            throw ConfigError("--num-features " + std::to_string(num_features_override) +
                              " is below the max feature index " +
                              std::to_string(ds.num_features));
        ds.num_features = num_features_override;
    }
    return ds;
}

inline void save_model(const std::string& path, const ParamVector& model,
                       const Regularizer& reg, int num_features) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write model file '" + path + "'");
    out << "# mmsvm model\n";
    out << "num_features = " << num_features << "\n";
    out << "reg = " << reg_kind_name(reg.kind) << "\n";
    out << "lambda = " << format_double(reg.lambda) << "\n";
    out << "delta = " << format_double(reg.delta) << "\n";
    out << "eta = " << format_double(reg.eta) << "\n";
    out << "theta = " << model.dim() << "\n";
    for (double v : model.theta) out << format_double(v) << "\n";
}

struct LoadedModel {
    ParamVector model;
    Regularizer reg;
    int num_features = 0;
};

namespace detail {

inline std::pair<std::string, std::string> split_kv(const std::string& line,
                                                    const std::string& path) {
    std::size_t eq = line.find('=');
    if (eq == std::string::npos) throw IoError("malformed line in '" + path + "': " + line);
    auto trim = [](std::string s) {
        std::size_t a = s.find_first_not_of(" \t");
        std::size_t b = s.find_last_not_of(" \t");
        return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    return {trim(line.substr(0, eq)), trim(line.substr(eq + 1))};
}

}  // namespace detail

inline LoadedModel load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open model file '" + path + "'");
    LoadedModel lm;
    std::string line;
    std::size_t theta_len = 0;
    std::string reg_name = "l2";
    double lambda = 0.0, delta = 0.0, eta = 0.0;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        auto [key, value] = detail::split_kv(line, path);
        if (key == "num_features") lm.num_features = std::stoi(value);
        else if (key == "reg") reg_name = value;
        else if (key == "lambda") lambda = std::stod(value);
        else if (key == "delta") delta = std::stod(value);
        else if (key == "eta") eta = std::stod(value);
        else if (key == "theta") {
            theta_len = std::stoul(value);
            break;
        } else throw IoError("unknown model key '" + key + "' in '" + path + "'");
    }
    if (theta_len == 0) throw IoError("model file '" + path + "' has no theta block");
    lm.model.theta.resize(theta_len);
    for (std::size_t i = 0; i < theta_len; ++i) {
        if (!std::getline(in, line))
            throw IoError("model file '" + path + "' ends inside the theta block");
        lm.model.theta[i] = std::stod(line);
    }
    RegKind kind = reg_kind_from_name(reg_name);
    lm.reg = kind == RegKind::QuadraticOnly ? Regularizer::quadratic_only(eta)
             : kind == RegKind::Hyperbolic  ? Regularizer::hyperbolic(lambda, delta, eta)
                                            : Regularizer::welsh(lambda, delta, eta);
    return lm;
}

inline void save_refmin(const std::string& path, const ReferenceMinimum& ref,
                        double epsilon_curv) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write reference-minimum file '" + path + "'");
    out << "phi_star = " << format_double(ref.phi_star) << "\n";
    out << "produced_by = " << method_name(ref.produced_by) << "\n";
    out << "iterations = " << ref.iterations << "\n";
    out << "grad_inf_norm = " << format_double(ref.gradient_norm_at_star) << "\n";
    out << "epsilon_curv = " << format_double(epsilon_curv) << "\n";
}

inline ReferenceMinimum load_refmin(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open reference-minimum file '" + path + "'");
    ReferenceMinimum ref;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        auto [key, value] = detail::split_kv(line, path);
        if (key == "phi_star") ref.phi_star = std::stod(value);
        else if (key == "produced_by") ref.produced_by = method_from_name(value);
        else if (key == "iterations") ref.iterations = std::stoul(value);
        else if (key == "grad_inf_norm") ref.gradient_norm_at_star = std::stod(value);
        else if (key == "epsilon_curv") continue;  // provenance only
        else throw IoError("unknown refmin key '" + key + "' in '" + path + "'");
    }
    return ref;
}

// trace.csv: epoch,phi,grad_norm,seconds,samples[,gap]
inline void write_trace_csv(const std::string& path, const TrainTrace& trace,
                            const std::vector<double>* gaps) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write trace file '" + path + "'");
    out << "epoch,phi,grad_norm,seconds,samples";
    if (gaps) out << ",gap";
    out << "\n";
    for (std::size_t i = 0; i < trace.size(); ++i) {
        const TraceRecord& r = trace.records[i];
        out << r.epoch << ',' << format_double(r.phi) << ',' << format_double(r.grad_norm)
            << ',' << format_double(r.seconds) << ',' << r.sample_grads;
        if (gaps) out << ',' << format_double((*gaps)[i]);
        out << "\n";
    }
}

struct TraceCsv {
    TrainTrace trace;
    std::vector<double> gaps;  // empty when the file has no gap column
};

inline TraceCsv parse_trace_csv(std::istream& in, const std::string& path = "<csv>") {
    TraceCsv out;
    std::string line;
    if (!std::getline(in, line)) throw IoError("empty trace csv '" + path + "'");
    bool has_gap = line.find(",gap") != std::string::npos;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string cell;
        auto next = [&]() {
            if (!std::getline(row, cell, ','))
                throw ParseError("short row in trace csv '" + path + "'", line_no);
            return cell;
        };
        TraceRecord rec;
        rec.epoch = std::stoul(next());
        rec.phi = std::stod(next());
        rec.grad_norm = std::stod(next());
        rec.seconds = std::stod(next());
        rec.sample_grads = std::stoull(next());
        if (has_gap) out.gaps.push_back(std::stod(next()));
        out.trace.records.push_back(rec);
    }
    return out;
}

inline TraceCsv load_trace_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open trace file '" + path + "'");
    return parse_trace_csv(in, path);
}

// ---------------------------------------------------------------------------
// Run records
// ---------------------------------------------------------------------------

struct RunRecord {
    std::map<std::string, std::string> config;  // resolved echo, sorted keys
    MetricReport metrics;
    TrainTrace trace;
    std::vector<double> gaps;  // aligned with trace when refmin was given
    double total_seconds = 0.0;
};

inline std::string metric_to_text(const std::optional<double>& m) {
    return m ? format_double(*m) : std::string("undefined");
}

inline std::optional<double> metric_from_text(const std::string& s) {
    if (s == "undefined") return std::nullopt;
    return std::stod(s);
}

inline void save_run_record(const std::string& path, const RunRecord& rec) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write run record '" + path + "'");
    out << "[config]\n";
    for (const auto& [k, v] : rec.config) out << k << " = " << v << "\n";
    out << "[metrics]\n";
    out << "accuracy = " << metric_to_text(rec.metrics.accuracy) << "\n";
    out << "precision = " << metric_to_text(rec.metrics.precision) << "\n";
    out << "recall = " << metric_to_text(rec.metrics.recall) << "\n";
    out << "f1 = " << metric_to_text(rec.metrics.f1) << "\n";
    out << "sparsity_count = " << rec.metrics.sparsity_count << "\n";
    out << "sparsity_total = " << rec.metrics.sparsity_total << "\n";
    out << "[timing]\n";
    out << "total_seconds = " << format_double(rec.total_seconds) << "\n";
    out << "[trace]\n";
    out << "epoch,phi,grad_norm,seconds,samples";
    if (!rec.gaps.empty()) out << ",gap";
    out << "\n";
    for (std::size_t i = 0; i < rec.trace.size(); ++i) {
        const TraceRecord& r = rec.trace.records[i];
        out << r.epoch << ',' << format_double(r.phi) << ',' << format_double(r.grad_norm)
            << ',' << format_double(r.seconds) << ',' << r.sample_grads;
        if (!rec.gaps.empty()) out << ',' << format_double(rec.gaps[i]);
        out << "\n";
    }
}

inline RunRecord load_run_record(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open run record '" + path + "'");
    RunRecord rec;
    std::string line, section;
    std::ostringstream trace_block;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line.front() == '[') {
            section = line;
            continue;
        }
        if (section == "[config]") {
            auto [k, v] = detail::split_kv(line, path);
            rec.config[k] = v;
        } else if (section == "[metrics]") {
            auto [k, v] = detail::split_kv(line, path);
            if (k == "accuracy") rec.metrics.accuracy = metric_from_text(v);
            else if (k == "precision") rec.metrics.precision = metric_from_text(v);
            else if (k == "recall") rec.metrics.recall = metric_from_text(v);
            else if (k == "f1") rec.metrics.f1 = metric_from_text(v);
            else if (k == "sparsity_count") rec.metrics.sparsity_count = std::stoul(v);
            else if (k == "sparsity_total") rec.metrics.sparsity_total = std::stoul(v);
        } else if (section == "[timing]") {
            auto [k, v] = detail::split_kv(line, path);
            if (k == "total_seconds") rec.total_seconds = std::stod(v);
        } else if (section == "[trace]") {
            trace_block << line << "\n";
        }
    }
    std::istringstream ts(trace_block.str());
    TraceCsv parsed = parse_trace_csv(ts, path);
    rec.trace = std::move(parsed.trace);
    rec.gaps = std::move(parsed.gaps);
    return rec;
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

namespace detail {

inline std::map<std::string, std::string> echo_config(const ExperimentConfig& cfg,
                                                      const Regularizer& reg,
                                                      const SolverConfig& sc,
                                                      int num_features) {
    std::map<std::string, std::string> m;
    m["data"] = cfg.data_path;
    m["test_data"] = cfg.test_data_path;
    m["split"] = format_double(cfg.split_fraction);
    m["seed"] = std::to_string(cfg.seed);
    m["num_features"] = std::to_string(num_features);
    m["method"] = method_name(cfg.method);
    m["reg"] = reg_kind_name(reg.kind);
    m["lambda"] = format_double(reg.lambda);
    m["delta"] = format_double(reg.delta);
    m["eta"] = format_double(reg.eta);
    m["alpha"] = (cfg.method == Method::FG && sc.fg_alpha_auto)
                     ? std::string("auto")
                     : format_double(sc.alpha != 0.0 ? sc.alpha
                                                     : detail::default_alpha(cfg.method));
    m["epochs"] = std::to_string(cfg.epochs);
    m["iota"] = std::to_string(cfg.iota);
    m["batch"] = std::to_string(cfg.batch);
    m["eps_curv"] = format_double(cfg.eps_curv);
    m["momentum_beta"] = format_double(cfg.momentum_beta);
    m["adam_beta1"] = format_double(cfg.adam_beta1);
    m["adam_beta2"] = format_double(cfg.adam_beta2);
    m["adam_epshat"] = format_double(cfg.adam_epshat);
    m["sparsity_tau"] = format_double(cfg.sparsity_tau);
    m["refmin"] = cfg.refmin_path;
    m["out"] = cfg.out_dir;
    return m;
}

struct PreparedData {
    Dataset train;
    Dataset test;
};

inline PreparedData prepare_data(const ExperimentConfig& cfg) {
    if (cfg.data_path.empty()) throw ConfigError("--data is required");
    Dataset data = load_dataset_file(cfg.data_path, cfg.num_features_override);
    PreparedData out;
    if (!cfg.test_data_path.empty()) {
        out.train = std::move(data);
        out.test = load_dataset_file(cfg.test_data_path, cfg.num_features_override);
        int n = std::max(out.train.num_features, out.test.num_features);
        out.train.num_features = out.test.num_features = n;
    } else {
        auto [train, test] = split(data, {cfg.split_fraction, cfg.seed});
        out.train = std::move(train);
        out.test = std::move(test);
    }
    if (!has_both_classes(out.train))
        std::cerr << "warning: training set has a single label class\n";
    return out;
}

}  // namespace detail

struct TrainOutput {
    RunRecord record;
    ParamVector model;
    Regularizer reg;
    int num_features = 0;
};

// Full pipeline without touching the filesystem for outputs.
inline TrainOutput run_train(const ExperimentConfig& cfg) {
    detail::PreparedData data = detail::prepare_data(cfg);
    Regularizer reg = resolve_regularizer(cfg.reg_kind, cfg.lambda, cfg.delta, cfg.eta);
    SolverConfig sc = solver_config_from(cfg);

    DesignMatrix design = build_design_matrix(data.train);
    ObjectiveContext ctx{design, reg};

    auto t0 = std::chrono::steady_clock::now();
    RunResult result = run(ctx, sc, ParamVector::zeros(design.dim()));
    double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    TrainOutput out;
    out.model = result.theta;
    out.reg = reg;
    out.num_features = data.train.num_features;
    out.record.trace = std::move(result.trace);
    out.record.total_seconds = seconds;
    out.record.config = detail::echo_config(cfg, reg, sc, data.train.num_features);

    if (!data.test.samples.empty()) {
        ConfusionCounts c = confusion(out.model, data.test);
        out.record.metrics = report(c, data.test.size(), out.model, cfg.sparsity_tau);
    } else {
        out.record.metrics = report(ConfusionCounts{}, 0, out.model, cfg.sparsity_tau);
    }

    if (!cfg.refmin_path.empty()) {
        ReferenceMinimum ref = load_refmin(cfg.refmin_path);
        out.record.gaps = optimality_gap(out.record.trace, ref);
    }
    return out;
}

// Train, then write run_record.txt, trace.csv and model.txt under out_dir.
inline RunRecord cmd_train(const ExperimentConfig& cfg) {
    TrainOutput out = run_train(cfg);
    std::filesystem::create_directories(cfg.out_dir);
    save_run_record((std::filesystem::path(cfg.out_dir) / "run_record.txt").string(),
                    out.record);
    write_trace_csv((std::filesystem::path(cfg.out_dir) / "trace.csv").string(),
                    out.record.trace, out.record.gaps.empty() ? nullptr : &out.record.gaps);
    save_model((std::filesystem::path(cfg.out_dir) / "model.txt").string(), out.model,
               out.reg, out.num_features);
    return out.record;
}

// Long MM run on the training objective; writes refmin.txt.
inline ReferenceMinimum cmd_refmin(const ExperimentConfig& cfg) {
    detail::PreparedData data = detail::prepare_data(cfg);
    Regularizer reg = resolve_regularizer(cfg.reg_kind, cfg.lambda, cfg.delta, cfg.eta);
    DesignMatrix design = build_design_matrix(data.train);
    ObjectiveContext ctx{design, reg};
    ReferenceMinimum ref = compute_reference_minimum(ctx, cfg.eps_curv);
    std::filesystem::create_directories(cfg.out_dir);
    save_refmin((std::filesystem::path(cfg.out_dir) / "refmin.txt").string(), ref,
                cfg.eps_curv);
    return ref;
}

// Evaluate a saved model on a dataset file (used whole, no splitting).
inline MetricReport cmd_evaluate(const ExperimentConfig& cfg) {
    if (cfg.model_path.empty()) throw ConfigError("--model is required");
    LoadedModel lm = load_model(cfg.model_path);
    Dataset data = load_dataset_file(cfg.data_path, cfg.num_features_override);
    if (data.num_features > lm.num_features)
        throw ConfigError("dataset has " + std::to_string(data.num_features) +
                          " features but the model was trained with " +
                          std::to_string(lm.num_features));
    ConfusionCounts c = confusion(lm.model, data);
    return report(c, data.size(), lm.model, cfg.sparsity_tau);
}

// ---------------------------------------------------------------------------
// Benchmark
// ---------------------------------------------------------------------------

struct BenchmarkCell {
    Method method;
    RegKind reg_kind;
    double lambda = std::nan("");  // NaN: protocol default
    bool failed = false;
    std::string failure;
    MetricReport metrics;
    TrainTrace trace;
    std::vector<double> gaps;
};

struct BenchmarkResult {
    std::vector<Method> methods;
    std::vector<BenchmarkCell> cells;
};

namespace detail {

inline std::size_t benchmark_threads(std::size_t cells) {
    std::size_t cap = std::thread::hardware_concurrency();
    if (cap == 0) cap = 1;
    if (const char* env = std::getenv("MMSVM_THREADS")) {
        char* end = nullptr;
        long v = std::strtol(env, &end, 10);
        if (end != env && v > 0) cap = static_cast<std::size_t>(v);
    }
    return std::min(cap, cells == 0 ? std::size_t{1} : cells);
}

inline std::string lambda_tag(double lambda) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", lambda);
    return buf;
}

}  // namespace detail

// Cross product {methods} x {regularizer configurations}. Each cell trains,
// evaluates on the shared test half and keeps its gap trace; failures are
// recorded as `failed` without stopping the rest. Cells run on up to
// MMSVM_THREADS worker threads over the shared immutable design matrix.
inline BenchmarkResult cmd_benchmark(const ExperimentConfig& cfg) {
    detail::PreparedData data = detail::prepare_data(cfg);

    std::vector<Method> methods = cfg.bench_methods;
    if (methods.empty())
        methods = {Method::FG,     Method::MMI, Method::HYBRID_MMI, Method::MM,
                   Method::HYBRID_MM, Method::SUB, Method::HYBRID_SUB};
    std::vector<RegKind> regs = cfg.bench_regs;
    if (regs.empty())
        regs = {RegKind::Hyperbolic, RegKind::Welsh, RegKind::QuadraticOnly};

    // one configuration per (reg, lambda); the l2 penalty ignores the sweep
    struct RegConfig {
        RegKind kind;
        double lambda;  // NaN: protocol default
    };
    std::vector<RegConfig> reg_configs;
    for (RegKind kind : regs) {
        if (kind != RegKind::QuadraticOnly && !cfg.bench_lambdas.empty())
            for (double l : cfg.bench_lambdas) reg_configs.push_back({kind, l});
        else
            reg_configs.push_back({kind, cfg.lambda});
    }

    DesignMatrix design = build_design_matrix(data.train);

    // reference minimum per regularizer configuration, for the gap traces
    std::vector<ReferenceMinimum> refs(reg_configs.size());
    for (std::size_t i = 0; i < reg_configs.size(); ++i) {
        Regularizer reg = resolve_regularizer(reg_configs[i].kind, reg_configs[i].lambda,
                                              cfg.delta, cfg.eta);
        ObjectiveContext ctx{design, reg};
        refs[i] = compute_reference_minimum(ctx, cfg.eps_curv);
    }

    BenchmarkResult result;
    result.methods = methods;
    result.cells.resize(methods.size() * reg_configs.size());

    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= result.cells.size()) return;
            std::size_t mi = i % methods.size();
            std::size_t ri = i / methods.size();
            BenchmarkCell& cell = result.cells[i];
            cell.method = methods[mi];
            cell.reg_kind = reg_configs[ri].kind;
            cell.lambda = reg_configs[ri].lambda;
            try {
                Regularizer reg = resolve_regularizer(cell.reg_kind, cell.lambda,
                                                      cfg.delta, cfg.eta);
                ObjectiveContext ctx{design, reg};
                ExperimentConfig cell_cfg = cfg;
                cell_cfg.method = cell.method;
                SolverConfig sc = solver_config_from(cell_cfg);
                RunResult run_out = run(ctx, sc, ParamVector::zeros(design.dim()));
                cell.trace = std::move(run_out.trace);
                cell.gaps = optimality_gap(cell.trace, refs[ri]);
                if (!data.test.samples.empty()) {
                    ConfusionCounts c = confusion(run_out.theta, data.test);
                    cell.metrics =
                        report(c, data.test.size(), run_out.theta, cfg.sparsity_tau);
                } else {
                    cell.metrics =
                        report(ConfusionCounts{}, 0, run_out.theta, cfg.sparsity_tau);
                }
            } catch (const std::exception& e) {
                cell.failed = true;
                cell.failure = e.what();
            }
        }
    };
    std::size_t nthreads = detail::benchmark_threads(result.cells.size());
    std::vector<std::thread> pool;
    for (std::size_t t = 1; t < nthreads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    // outputs: summary.csv shaped like the metric tables, one gap CSV per cell
    std::filesystem::create_directories(cfg.out_dir);
    std::ofstream summary(std::filesystem::path(cfg.out_dir) / "summary.csv");
    if (!summary) throw IoError("cannot write summary.csv");
    summary << "metric,reg,lambda";
    for (Method m : methods) summary << ',' << method_name(m);
    summary << "\n";

    auto cell_at = [&](std::size_t ri, std::size_t mi) -> const BenchmarkCell& {
        return result.cells[ri * methods.size() + mi];
    };
    const char* metric_names[] = {"accuracy", "recall", "precision", "f1", "sparsity"};
    for (std::size_t ri = 0; ri < reg_configs.size(); ++ri) {
        Regularizer reg = resolve_regularizer(reg_configs[ri].kind, reg_configs[ri].lambda,
                                              cfg.delta, cfg.eta);
        for (const char* metric : metric_names) {
            summary << metric << ',' << reg_kind_name(reg.kind) << ','
                    << format_double(reg.lambda);
            for (std::size_t mi = 0; mi < methods.size(); ++mi) {
                const BenchmarkCell& cell = cell_at(ri, mi);
                summary << ',';
                if (cell.failed) {
                    summary << "failed";
                    continue;
                }
                const MetricReport& mr = cell.metrics;
                std::string text;
                if (std::string(metric) == "accuracy") text = metric_to_text(mr.accuracy);
                else if (std::string(metric) == "recall") text = metric_to_text(mr.recall);
                else if (std::string(metric) == "precision") text = metric_to_text(mr.precision);
                else if (std::string(metric) == "f1") text = metric_to_text(mr.f1);
                else text = std::to_string(mr.sparsity_count);
                summary << text;
            }
            summary << "\n";
        }
        for (std::size_t mi = 0; mi < methods.size(); ++mi) {
            const BenchmarkCell& cell = cell_at(ri, mi);
            if (cell.failed) continue;
            std::string name = std::string("gap_") + method_name(cell.method) + "_" +
                               reg_kind_name(cell.reg_kind);
            if (cell.reg_kind != RegKind::QuadraticOnly && !cfg.bench_lambdas.empty())
                name += "_" + detail::lambda_tag(cell.lambda);
            name += ".csv";
            write_trace_csv((std::filesystem::path(cfg.out_dir) / name).string(),
                            cell.trace, &cell.gaps);
        }
    }
    return result;
}

}  // namespace mmsvm
