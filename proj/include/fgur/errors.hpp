#pragma once

#include <stdexcept>
#include <string>

namespace fgur {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Incompatible subsystem dimensions or out-of-range subsystem indices.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// An object violates a structural invariant (Hermiticity, completeness, unit trace, ...).
class ValidationError : public Error {
public:
    using Error::Error;
};

/// An operator required to be positive semidefinite has a negative eigenvalue.
class PositivityError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

/// The requested construction exists only for some parameters (e.g. prime dimensions).
class UnsupportedError : public Error {
public:
    using Error::Error;
};

/// A cross-check between independently computed quantities failed.
class InvariantError : public Error {
public:
    using Error::Error;
};

/// Malformed or inconsistent JSON input.
class FormatError : public Error {
public:
    using Error::Error;
};

}  // namespace fgur
