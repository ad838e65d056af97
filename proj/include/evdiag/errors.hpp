#pragma once

#include <stdexcept>
#include <string>

namespace evdiag {

/// Base of every error thrown by the library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent input (non-finite values, mismatched grids, ...).
struct ValidationError : Error {
    using Error::Error;
};

/// Argument outside its admissible range (averaging horizon, beta, ...).
struct RangeError : Error {
    using Error::Error;
};

/// A negative mixing length or turbulent kinetic energy reached a closure.
struct ClosureInputError : Error {
    using Error::Error;
};

/// A scale that the statistics divide by is zero or cannot be formed.
struct UndefinedScaleError : Error {
    using Error::Error;
};

/// Time integration broke down (non-finite state).
struct SolverError : Error {
    using Error::Error;
};

/// Bad magic, version or header contents in a snapshot file.
struct FormatError : Error {
    using Error::Error;
};

/// Snapshot payload shorter or longer than the header declares.
struct LengthError : Error {
    using Error::Error;
};

}  // namespace evdiag
