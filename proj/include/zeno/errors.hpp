#pragma once

#include <stdexcept>
#include <string>

namespace zeno {

/// Quadrature did not reach its tolerance, or a requested evaluation lies
/// outside what the sampled data can resolve.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An argument sits within the singular window of a band edge.
class SingularPointError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// A physical invariant (non-negative density, probability range, ...) was
/// violated beyond tolerance. Usually signals a branch or sign bug.
class InvariantError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace zeno
