#pragma once

#include <stdexcept>
#include <string>

namespace dk {

/// Base class for all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Exact division was requested but the operand is not divisible.
struct NotDivisible : Error {
    using Error::Error;
};

/// A division or conversion would leave no significant digits.
struct InsufficientPrecision : Error {
    using Error::Error;
};

/// Operands do not share (prime, precision, variable count).
struct DimensionMismatch : Error {
    using Error::Error;
};

/// A level index at or beyond the tracked precision was requested.
struct PrecisionExceeded : Error {
    using Error::Error;
};

struct NotAUnit : Error {
    using Error::Error;
};

struct NotUnipotent : Error {
    using Error::Error;
};

struct ZeroOperator : Error {
    using Error::Error;
};

struct NotTorsion : Error {
    using Error::Error;
};

struct NotInNormalizer : Error {
    using Error::Error;
};

struct ParseError : Error {
    using Error::Error;
};

struct SchemaVersionMismatch : ParseError {
    using ParseError::ParseError;
};

} // namespace dk
