#pragma once

#include <stdexcept>
#include <string>

namespace biascav {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Input that violates a documented precondition or invariant.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Request outside the calibrated or modelled domain (e.g. an uncalibrated mode).
class UnsupportedError : public Error {
public:
    using Error::Error;
};

/// Iterative method failed to reach its tolerance.
class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& what, double residual, long iterations)
        : Error(what + " (residual " + std::to_string(residual) + " after " +
                std::to_string(iterations) + " iterations)"),
          residual_(residual),
          iterations_(iterations) {}

    [[nodiscard]] double residual() const noexcept { return residual_; }
    [[nodiscard]] long iterations() const noexcept { return iterations_; }

private:
    double residual_;
    long iterations_;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace biascav
