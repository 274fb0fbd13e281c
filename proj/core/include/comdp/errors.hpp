#pragma once

#include <stdexcept>
#include <string>

namespace comdp {

/// Bad argument or malformed input file.
struct InputError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// A construction or enumeration would exceed its size guard.
struct SizeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// An iterative procedure exhausted its budget without meeting tolerance.
struct ConvergenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Rank-deficient design matrix in a projection.
struct SingularityError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Non-finite values or a violated solver invariant.
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A random generator hit its resampling cap.
struct GenerationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace comdp
