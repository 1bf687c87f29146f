#pragma once

#include <stdexcept>
#include <string>

namespace optomag {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Physical parameters violate a documented invariant.
class ParameterError : public Error {
public:
    using Error::Error;
};

/// Subsystem dimensions are inconsistent (tensor products, partial traces, operators).
class DimensionError : public Error {
public:
    using Error::Error;
};

/// A Fock truncation is too small for the requested state or operator.
class TruncationError : public Error {
public:
    using Error::Error;
};

/// A numerical procedure did not reach its accuracy target.
class ConvergenceError : public Error {
public:
    using Error::Error;
};

/// A master-equation trajectory violated trace, Hermiticity or positivity bounds.
class ConservationError : public Error {
public:
    using Error::Error;
};

/// Malformed or out-of-range configuration input.
class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace optomag
