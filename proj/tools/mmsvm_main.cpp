// mmsvm: train and evaluate sparse linear SVM classifiers with the MM solver
// family. Subcommands: train, evaluate, benchmark, refmin.
//
// Exit codes: 0 success, 2 usage/config error, 3 I/O or parse error,
// 4 solver divergence, 5 internal invariant violation.

#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mmsvm/experiment.hpp"

namespace {

using mmsvm::ExperimentConfig;

struct StringOptions {
    std::string method = "h-mmi";
    std::string reg = "hyperbolic";
    std::string config_path;
    std::vector<std::string> bench_methods;
    std::vector<std::string> bench_regs;
};

// Flat `key = value` config support: file entries become `--key value` pairs
// injected ahead of the real command line, so explicit flags win.
std::vector<std::string> merge_config_file(int argc, char** argv) {
    std::vector<std::string> args(argv, argv + argc);
    std::string path;
    for (std::size_t i = 1; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
        else if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
    }
    if (path.empty()) return args;

    std::ifstream in(path);
    if (!in) throw mmsvm::IoError("cannot open config file '" + path + "'");
    auto trim = [](std::string s) {
        std::size_t a = s.find_first_not_of(" \t");
        std::size_t b = s.find_last_not_of(" \t\r");
        return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    std::vector<std::string> injected;
    std::string line;
    while (std::getline(in, line)) {
        std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        std::size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw mmsvm::ConfigError("config file line is not key = value: " + t);
        injected.push_back("--" + trim(t.substr(0, eq)));
        injected.push_back(trim(t.substr(eq + 1)));
    }

    std::vector<std::string> merged;
    merged.push_back(args[0]);
    std::size_t rest = 1;
    if (args.size() > 1 && !args[1].empty() && args[1][0] != '-') {
        merged.push_back(args[1]);  // subcommand stays first
        rest = 2;
    }
    merged.insert(merged.end(), injected.begin(), injected.end());
    merged.insert(merged.end(), args.begin() + rest, args.end());
    return merged;
}

void add_data_options(CLI::App* sub, ExperimentConfig& cfg, StringOptions& so) {
    sub->add_option("--data", cfg.data_path, "LIBSVM dataset file")->required();
    sub->add_option("--test-data", cfg.test_data_path,
                    "separate LIBSVM test file (skips the split)");
    sub->add_option("--split", cfg.split_fraction,
                    "training fraction for the seeded split")
        ->capture_default_str();
    sub->add_option("--seed", cfg.seed, "PRNG seed for splitting and index draws")
        ->capture_default_str();
    sub->add_option("--num-features", cfg.num_features_override,
                    "force the feature count (for test files missing top indices)");
    sub->add_option("--config", so.config_path,
                    "flat key = value option file; explicit flags override it");
}

void add_reg_options(CLI::App* sub, ExperimentConfig& cfg, StringOptions& so) {
    sub->add_option("--reg", so.reg, "regularizer: l2, hyperbolic or welsh")
        ->capture_default_str();
    sub->add_option("--lambda", cfg.lambda, "potential weight (default 1e-4; l2: 0)");
    sub->add_option("--delta", cfg.delta, "potential scale (default 1e-4; l2: 0)");
    sub->add_option("--eta", cfg.eta, "ridge weight (default 0; l2: 1e-4)");
}

void add_solver_options(CLI::App* sub, ExperimentConfig& cfg, StringOptions& so) {
    sub->add_option("--method", so.method,
                    "fg, mm, mmi, sub, gradmm, sg, momentum, adam, h-mm, h-mmi, h-sub")
        ->capture_default_str();
    sub->add_option("--alpha", cfg.alpha,
                    "stepsize (default: 1.9/mu for fg, tuned defaults otherwise)");
    sub->add_option("--epochs", cfg.epochs, "epoch count")->capture_default_str();
    sub->add_option("--iota", cfg.iota, "hybrid warm-up epochs")->capture_default_str();
    sub->add_option("--batch", cfg.batch, "minibatch size")->capture_default_str();
    sub->add_option("--eps-curv", cfg.eps_curv, "epsilon in the curvature bias slot")
        ->capture_default_str();
    sub->add_option("--momentum-beta", cfg.momentum_beta, "momentum decay")
        ->capture_default_str();
    sub->add_option("--adam-beta1", cfg.adam_beta1, "Adam first-moment decay")
        ->capture_default_str();
    sub->add_option("--adam-beta2", cfg.adam_beta2, "Adam second-moment decay")
        ->capture_default_str();
    sub->add_option("--adam-epshat", cfg.adam_epshat, "Adam denominator floor")
        ->capture_default_str();
}

void print_report(const mmsvm::MetricReport& m) {
    std::cout << "accuracy = " << mmsvm::metric_to_text(m.accuracy) << "\n"
              << "precision = " << mmsvm::metric_to_text(m.precision) << "\n"
              << "recall = " << mmsvm::metric_to_text(m.recall) << "\n"
              << "f1 = " << mmsvm::metric_to_text(m.f1) << "\n"
              << "sparsity = " << m.sparsity_count << "/" << m.sparsity_total << "\n";
}

int dispatch(int argc, char** argv) {
    CLI::App app{"Sparse linear SVM training with majorization-minimization solvers"};
    app.require_subcommand(1);
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

    ExperimentConfig cfg;
    StringOptions so;

    CLI::App* train = app.add_subcommand("train", "train one model, write record/trace/model");
    add_data_options(train, cfg, so);
    add_reg_options(train, cfg, so);
    add_solver_options(train, cfg, so);
    train->add_option("--sparsity-tau", cfg.sparsity_tau, "|w_i| <= tau counts as zero")
        ->capture_default_str();
    train->add_option("--refmin", cfg.refmin_path,
                      "reference-minimum file; adds a gap column to trace.csv");
    train->add_option("--out", cfg.out_dir, "output directory")->capture_default_str();

    CLI::App* evaluate = app.add_subcommand("evaluate", "evaluate a saved model on a dataset");
    evaluate->add_option("--model", cfg.model_path, "model file from train")->required();
    add_data_options(evaluate, cfg, so);
    evaluate->add_option("--sparsity-tau", cfg.sparsity_tau, "|w_i| <= tau counts as zero")
        ->capture_default_str();

    CLI::App* benchmark =
        app.add_subcommand("benchmark", "method x regularizer table plus gap traces");
    add_data_options(benchmark, cfg, so);
    add_reg_options(benchmark, cfg, so);
    add_solver_options(benchmark, cfg, so);
    benchmark->add_option("--methods", so.bench_methods, "comma list; default: the standard seven")
        ->delimiter(',');
    benchmark->add_option("--regs", so.bench_regs, "comma list; default: hyperbolic,welsh,l2")
        ->delimiter(',');
    benchmark->add_option("--lambdas", cfg.bench_lambdas, "lambda sweep for the potentials")
        ->delimiter(',');
    benchmark->add_option("--sparsity-tau", cfg.sparsity_tau, "|w_i| <= tau counts as zero")
        ->capture_default_str();
    benchmark->add_option("--out", cfg.out_dir, "output directory")->capture_default_str();

    CLI::App* refmin = app.add_subcommand("refmin", "long MM run; writes refmin.txt");
    add_data_options(refmin, cfg, so);
    add_reg_options(refmin, cfg, so);
    refmin->add_option("--eps-curv", cfg.eps_curv, "epsilon in the curvature bias slot")
        ->capture_default_str();
    refmin->add_option("--out", cfg.out_dir, "output directory")->capture_default_str();

    std::vector<std::string> args = merge_config_file(argc, argv);
    std::vector<const char*> argv2;
    for (const std::string& a : args) argv2.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv2.size()), argv2.data());
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);  // prints help, exits 0
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    cfg.method = mmsvm::method_from_name(so.method);
    cfg.reg_kind = mmsvm::reg_kind_from_name(so.reg);
    for (const std::string& m : so.bench_methods)
        cfg.bench_methods.push_back(mmsvm::method_from_name(m));
    for (const std::string& r : so.bench_regs)
        cfg.bench_regs.push_back(mmsvm::reg_kind_from_name(r));

    if (train->parsed()) {
        mmsvm::RunRecord rec = mmsvm::cmd_train(cfg);
        print_report(rec.metrics);
        std::cout << "final_phi = " << mmsvm::format_double(rec.trace.back().phi) << "\n"
                  << "total_seconds = " << rec.total_seconds << "\n"
                  << "outputs = " << cfg.out_dir << "\n";
    } else if (evaluate->parsed()) {
        print_report(mmsvm::cmd_evaluate(cfg));
    } else if (benchmark->parsed()) {
        mmsvm::BenchmarkResult res = mmsvm::cmd_benchmark(cfg);
        std::size_t failed = 0;
        for (const auto& cell : res.cells) failed += cell.failed ? 1 : 0;
        std::cout << "cells = " << res.cells.size() << "\n"
                  << "failed = " << failed << "\n"
                  << "outputs = " << cfg.out_dir << "\n";
    } else if (refmin->parsed()) {
        mmsvm::ReferenceMinimum ref = mmsvm::cmd_refmin(cfg);
        std::cout << "phi_star = " << mmsvm::format_double(ref.phi_star) << "\n"
                  << "iterations = " << ref.iterations << "\n"
                  << "grad_inf_norm = " << mmsvm::format_double(ref.gradient_norm_at_star)
                  << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return dispatch(argc, argv);
    } catch (const mmsvm::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const mmsvm::ParseError& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return 3;
    } catch (const mmsvm::IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return 3;
    } catch (const mmsvm::DivergenceError& e) {
        std::cerr << "solver divergence: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 5;
    }
}
