#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>

namespace freeconv {

using cplx = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr cplx kI{0.0, 1.0};

/** Base class of every error raised by the library. */
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Evaluation at a pole (atom of a measure, Lévy atom, G = 0).
class PoleError : public Error {
public:
    using Error::Error;
};

/// Argument lies on (or too close to) a branch cut.
class BranchError : public Error {
public:
    using Error::Error;
};

/// Precondition on a parameter or measure violated.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Quadrature or extrapolation did not reach the requested accuracy.
class ToleranceError : public Error {
public:
    using Error::Error;
};

/// Iterative solver failed to converge.
class ConvergenceError : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    ParseError(const std::string& msg, std::size_t line, std::size_t column)
        : Error(msg + " at line " + std::to_string(line) + ", column " + std::to_string(column)),
          line_(line),
          column_(column) {}
    std::size_t line() const { return line_; }
    std::size_t column() const { return column_; }

private:
    std::size_t line_;
    std::size_t column_;
};

inline bool is_finite(cplx z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); }

}  // namespace freeconv
