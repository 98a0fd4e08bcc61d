#pragma once

#include <stdexcept>
#include <string>

namespace geomech {

/// Base class for all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Expression source failed to parse. Carries the byte offset of the failure.
struct ParseError : Error {
    ParseError(const std::string& msg, std::size_t offset)
        : Error(msg + " (at byte " + std::to_string(offset) + ")"), offset(offset) {}
    std::size_t offset;
};

/// Expression evaluation failed (unbound variable or domain error).
struct EvalError : Error {
    using Error::Error;
};

/// A numerical evaluation produced a non-finite value.
struct NumericalError : Error {
    using Error::Error;
};

/// Mass matrix singular or too ill-conditioned to invert.
struct DegenerateLagrangian : Error {
    using Error::Error;
};

/// LU-type factorization hit a zero or negative leading minor.
struct FactorizationOutsideBigCell : Error {
    using Error::Error;
};

/// Lagrangian or force fails the symmetry requirements.
struct InvarianceFailure : Error {
    using Error::Error;
};

/// Group-velocity elimination (momentum constraint solve) is singular.
struct ConstraintSolveFailure : Error {
    using Error::Error;
};

/// An operation's stated precondition does not hold.
struct PreconditionError : Error {
    using Error::Error;
};

/// Run configuration is malformed or inconsistent.
struct ConfigError : Error {
    using Error::Error;
};

}  // namespace geomech
