#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace glvred {

/// Base class for all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A precondition of an operation was violated (bad dimensions, bad arguments).
struct ContractViolation : Error {
    using Error::Error;
};

/// Input document could not be parsed (malformed JSON/CSV, missing field).
struct ParseError : Error {
    using Error::Error;
};

/// One model-invariant violation, reported as data by validate().
struct ModelViolation {
    std::string field;    // "b", "A", "x0", "labels"
    int index = 0;        // 1-based species/entry index, 0 if not applicable
    std::string message;  // human-readable reason
};

/// A model failed validation; carries every violation found.
struct ValidationError : Error {
    std::vector<ModelViolation> violations;
    ValidationError(std::string msg, std::vector<ModelViolation> v)
        : Error(std::move(msg)), violations(std::move(v)) {}
};

/// Requested reduction is not possible for this model (nonzero required
/// entry or zero pivot). Row/col are 1-based original species indices.
struct InfeasibleError : Error {
    int row = 0;
    int col = 0;
    InfeasibleError(std::string msg, int r, int c) : Error(std::move(msg)), row(r), col(c) {}
};

/// Division by a vanishing concentration. Species index is 1-based.
struct SingularityError : Error {
    int species = 0;
    SingularityError(std::string msg, int sp) : Error(std::move(msg)), species(sp) {}
};

/// A state component became non-positive or non-finite during integration.
struct PositivityError : Error {
    double time = 0.0;
    int species = 0;  // 1-based
    PositivityError(std::string msg, double t, int sp)
        : Error(std::move(msg)), time(t), species(sp) {}
};

/// The per-node fixed point did not converge.
struct ConvergenceError : Error {
    long step = 0;
    double last_residual = 0.0;
    ConvergenceError(std::string msg, long st, double res)
        : Error(std::move(msg)), step(st), last_residual(res) {}
};

/// Argument outside its admissible range (e.g. sample time outside grid).
struct RangeError : Error {
    using Error::Error;
};

/// A serialized artifact is internally inconsistent (cyclic dependencies,
/// coefficients that do not match the embedded model, ...).
struct IntegrityError : Error {
    using Error::Error;
};

/// Search space too large for exhaustive enumeration and no heuristic allowed.
struct BudgetError : Error {
    using Error::Error;
};

/// Filesystem failure while reading or writing an artifact.
struct IoError : Error {
    using Error::Error;
};

}  // namespace glvred
