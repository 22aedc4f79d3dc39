#pragma once

#include <stdexcept>
#include <string>

namespace markerlab {

/// Base class for all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Malformed input data (bad file contents, invalid parameters).
struct ParseError : Error {
    using Error::Error;
};

/// A documented invariant or precondition was violated.
struct ValidationError : Error {
    using Error::Error;
};

/// Filesystem / stream failures.
struct IoError : Error {
    using Error::Error;
};

/// Geometric degeneracy (rank-deficient homography, point at infinity, ...).
struct GeometryError : Error {
    using Error::Error;
};

}  // namespace markerlab
