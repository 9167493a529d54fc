#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mmsvm {

// Base class for everything thrown by this library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Shape or size disagreement between operands.
struct DimensionError : Error {
    using Error::Error;
};

// Input expected to be symmetric is not (beyond tolerance).
struct NotSymmetricError : Error {
    using Error::Error;
};

// Cholesky pivot breakdown: some leading minor is not positive.
struct NotPositiveDefiniteError : Error {
    using Error::Error;
};

// NaN or infinity where a finite value is required.
struct NonFiniteError : Error {
    using Error::Error;
};

// Malformed input text; line numbers are 1-based.
struct ParseError : Error {
    ParseError(const std::string& msg, std::size_t line_no)
        : Error(msg + " (line " + std::to_string(line_no) + ")"), line(line_no) {}
    std::size_t line;
};

// Invalid or mutually inconsistent configuration.
struct ConfigError : Error {
    using Error::Error;
};

// File system failure (missing file, unwritable output, ...).
struct IoError : Error {
    using Error::Error;
};

// A solver produced a non-finite or runaway objective.
struct DivergenceError : Error {
    DivergenceError(const std::string& method_name, std::size_t at_epoch,
                    const std::string& detail)
        : Error("divergence in " + method_name + " at epoch " +
                std::to_string(at_epoch) + ": " + detail),
          method(method_name),
          epoch(at_epoch) {}
    std::string method;
    std::size_t epoch;
};

// A deterministic method increased the objective: the majorant is broken.
struct MonotonicityError : Error {
    MonotonicityError(const std::string& method_name, std::size_t at_epoch,
                      double phi_before, double phi_after)
        : Error("monotonicity violation in " + method_name + " at epoch " +
                std::to_string(at_epoch) + ": " + std::to_string(phi_before) +
                " -> " + std::to_string(phi_after)),
          method(method_name),
          epoch(at_epoch) {}
    std::string method;
    std::size_t epoch;
};

}  // namespace mmsvm
