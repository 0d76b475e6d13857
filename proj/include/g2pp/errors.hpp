#pragma once

#include <stdexcept>
#include <string>

namespace g2pp {

/// Bad input: unreadable files, malformed rows, violated preconditions.
/// The CLI maps it to exit code 2.
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Numerical failure: quadrature or root-finding did not converge,
/// singular calibration systems, degenerate parameterizations.
/// The CLI maps it to exit code 1.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Query outside the domain covered by a curve.
class DomainError : public InputError {
public:
    using InputError::InputError;
};

inline void require(bool condition, const std::string& message) {
    if (!condition) throw InputError(message);
}

}  // namespace g2pp
