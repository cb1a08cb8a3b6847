// errors.hpp — exception types shared across the library.

#pragma once

#include <stdexcept>
#include <string>

namespace boslink {

// Bad configuration, dimension mismatch, out-of-range parameter.
// The CLI maps this to exit code 2.
class ValidationError : public std::invalid_argument {
public:
    explicit ValidationError(const std::string& what) : std::invalid_argument(what) {}
};

// Requested operation would push population past the Fock truncation guard.
class TruncationError : public ValidationError {
public:
    explicit TruncationError(const std::string& what) : ValidationError(what) {}
};

// Pulse amplitude outside the modeled linear range of the optical chain.
class NonlinearityError : public ValidationError {
public:
    explicit NonlinearityError(const std::string& what) : ValidationError(what) {}
};

// Numerical failure at runtime (integrator instability, failed fit).
// The CLI maps this to exit code 3, same as non-convergence.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace boslink
