#pragma once

#include <stdexcept>
#include <string>

namespace nnspod {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Bad argument, violated precondition, or malformed configuration.
class InvalidInput : public Error {
public:
    using Error::Error;
};

/// File I/O failure or on-disk format violation.
class FormatError : public Error {
public:
    using Error::Error;
};

/// Iterative linear solver failed to reach the requested tolerance.
class SolverError : public Error {
public:
    SolverError(const std::string& msg, double residual, std::size_t iterations)
        : Error(msg), final_residual(residual), iterations(iterations) {}
    double final_residual;
    std::size_t iterations;
};

/// Numerical procedure failed (non-convergence, lost internal consistency).
class NumericalError : public Error {
public:
    using Error::Error;
};

/// Network training diverged or produced non-finite values.
class TrainingError : public Error {
public:
    TrainingError(const std::string& msg, std::size_t epoch)
        : Error(msg), epoch(epoch) {}
    std::size_t epoch;
};

/// Requested accuracy cannot be met with the retained modes.
class ThresholdUnreachable : public Error {
public:
    ThresholdUnreachable(const std::string& msg, double best)
        : Error(msg), best_achievable(best) {}
    double best_achievable;
};

}  // namespace nnspod
