#pragma once

// LIBSVM text parsing, seeded train/test splitting and construction of the
// design matrix Diag(y) [X | 1].

#include <cctype>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "mmsvm/error.hpp"
#include "mmsvm/linalg.hpp"
#include "mmsvm/prng.hpp"

namespace mmsvm {

struct FeatureEntry {
    int index = 0;  // 1-based
    double value = 0.0;

    friend bool operator==(const FeatureEntry& a, const FeatureEntry& b) {
        return a.index == b.index && a.value == b.value;
    }
};

using SparseFeatures = std::vector<FeatureEntry>;  // strictly increasing index

struct Sample {
    SparseFeatures features;
    int label = 0;  // -1 or +1 after normalization

    friend bool operator==(const Sample& a, const Sample& b) {
        return a.label == b.label && a.features == b.features;
    }
};

struct Dataset {
    std::vector<Sample> samples;
    int num_features = 0;  // N, excluding the bias column
    std::string name;

    std::size_t size() const { return samples.size(); }

    friend bool operator==(const Dataset& a, const Dataset& b) {
        return a.num_features == b.num_features && a.samples == b.samples;
    }
};

// K x (N+1) matrix with row k equal to y_k * [x_k^T 1].
struct DesignMatrix {
    DenseMatrix matrix;

    std::size_t num_samples() const { return matrix.rows; }
    std::size_t dim() const { return matrix.cols; }  // N+1
};

struct SplitSpec {
    double train_fraction = 0.8;
    std::uint64_t seed = 0;
};

namespace detail {

inline int normalize_label(double raw, std::size_t line_no) {
    if (raw == 1.0) return +1;
    if (raw == -1.0 || raw == 0.0 || raw == 2.0) return -1;
    throw ParseError("unsupported label value " + std::to_string(raw), line_no);
}

inline double parse_double_token(const std::string& tok, std::size_t line_no,
                                 const char* what) {
    std::size_t pos = 0;
    double v;
    try {
        v = std::stod(tok, &pos);
    } catch (const std::exception&) {
        throw ParseError(std::string("bad ") + what + " token '" + tok + "'", line_no);
    }
    if (pos != tok.size())
        throw ParseError(std::string("trailing characters in ") + what + " token '" +
                             tok + "'",
                         line_no);
    return v;
}

}  // namespace detail

// Parses LIBSVM text: `<label> <idx>:<val> ...`, one sample per nonempty line;
// lines starting with '#' are comments. Labels {-1,+1}, {0,1} and {1,2} are
// normalized onto {-1,+1}.
inline Dataset parse_libsvm(std::istream& in, const std::string& name = "") {
    Dataset ds;
    ds.name = name;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::size_t first = line.find_first_not_of(" \t");
        if (first == std::string::npos) continue;
        if (line[first] == '#') continue;

        std::istringstream tokens(line);
        std::string tok;
        tokens >> tok;
        Sample sample;
        sample.label = detail::normalize_label(
            detail::parse_double_token(tok, line_no, "label"), line_no);

        int prev_index = 0;
        while (tokens >> tok) {
            std::size_t colon = tok.find(':');
            if (colon == std::string::npos || colon == 0 || colon + 1 == tok.size())
                throw ParseError("expected <index>:<value>, got '" + tok + "'", line_no);
            double idx_raw =
                detail::parse_double_token(tok.substr(0, colon), line_no, "index");
            if (idx_raw != std::floor(idx_raw))
                throw ParseError("feature index must be integral in '" + tok + "'",
                                 line_no);
            int idx = static_cast<int>(idx_raw);
            if (idx < 1) throw ParseError("feature index must be >= 1", line_no);
            if (idx <= prev_index)
                throw ParseError("feature indices must be strictly increasing", line_no);
            double val =
                detail::parse_double_token(tok.substr(colon + 1), line_no, "value");
            if (!std::isfinite(val))
                throw ParseError("non-finite feature value in '" + tok + "'", line_no);
            sample.features.push_back({idx, val});
            prev_index = idx;
            ds.num_features = std::max(ds.num_features, idx);
        }
        ds.samples.push_back(std::move(sample));
    }
    if (ds.samples.empty()) throw ParseError("no samples in input", line_no);
    return ds;
}

inline Dataset parse_libsvm(const std::string& text, const std::string& name = "") {
    std::istringstream in(text);
    return parse_libsvm(in, name);
}

inline void write_libsvm(const Dataset& ds, std::ostream& out) {
    char buf[64];
    for (const Sample& s : ds.samples) {
        out << (s.label > 0 ? "+1" : "-1");
        for (const FeatureEntry& f : s.features) {
            std::snprintf(buf, sizeof(buf), "%.17g", f.value);
            out << ' ' << f.index << ':' << buf;
        }
        out << '\n';
    }
}

inline std::string write_libsvm(const Dataset& ds) {
    std::ostringstream out;
    write_libsvm(ds, out);
    return out.str();
}

inline bool has_both_classes(const Dataset& ds) {
    bool pos = false, neg = false;
    for (const Sample& s : ds.samples) (s.label > 0 ? pos : neg) = true;
    return pos && neg;
}

// Seeded Fisher-Yates shuffle, then cut at floor(train_fraction * K).
inline std::pair<Dataset, Dataset> split(const Dataset& ds, const SplitSpec& spec) {
    if (ds.samples.empty()) throw ConfigError("split: empty dataset");
    if (!(spec.train_fraction > 0.0) || spec.train_fraction > 1.0)
        throw ConfigError("split: train_fraction must be in (0, 1]");
    const std::size_t k = ds.samples.size();
    auto cut = static_cast<std::size_t>(std::floor(spec.train_fraction * static_cast<double>(k)));
    if (cut == 0) throw ConfigError("split: training set would be empty");

    std::vector<std::size_t> order(k);
    std::iota(order.begin(), order.end(), 0);
    SplitMix64 rng(spec.seed);
    shuffle(order, rng);

    Dataset train, test;
    train.num_features = test.num_features = ds.num_features;
    train.name = ds.name;
    test.name = ds.name;
    train.samples.reserve(cut);
    test.samples.reserve(k - cut);
    for (std::size_t i = 0; i < k; ++i)
        (i < cut ? train : test).samples.push_back(ds.samples[order[i]]);
    return {std::move(train), std::move(test)};
}

inline DesignMatrix build_design_matrix(const Dataset& ds) {
    if (ds.samples.empty()) throw ConfigError("build_design_matrix: empty dataset");
    const std::size_t k = ds.samples.size();
    const auto n = static_cast<std::size_t>(ds.num_features);
    DesignMatrix dm;
    dm.matrix = DenseMatrix(k, n + 1);
    for (std::size_t row = 0; row < k; ++row) {
        const Sample& s = ds.samples[row];
        auto y = static_cast<double>(s.label);
        double* out = dm.matrix.row_ptr(row);
        for (const FeatureEntry& f : s.features) {
            if (f.index > ds.num_features)
                throw DimensionError("build_design_matrix: feature index exceeds N");
            out[f.index - 1] = y * f.value;
        }
        out[n] = y;  // bias column carries the label sign
    }
    return dm;
}

}  // namespace mmsvm
