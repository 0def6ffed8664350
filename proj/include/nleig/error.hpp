#pragma once

#include <stdexcept>
#include <string>

namespace nleig {

/// Argument outside the mathematical domain of an operation.
class DomainError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Base for numerical failures (non-convergence, insufficient resolution, ...).
class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Requested mesh is too coarse to resolve the boundary layer.
class SizingError : public SolverError {
public:
    SizingError(const std::string& what, std::size_t minimal_n)
        : SolverError(what), minimal_n_(minimal_n) {}

    [[nodiscard]] std::size_t minimal_n() const noexcept { return minimal_n_; }

private:
    std::size_t minimal_n_;
};

class ConvergenceError : public SolverError {
public:
    ConvergenceError(const std::string& what, double last_residual)
        : SolverError(what), last_residual_(last_residual) {}

    [[nodiscard]] double last_residual() const noexcept { return last_residual_; }

private:
    double last_residual_;
};

/// Mesh refinement hit its ceiling before reaching the requested tolerance.
class ResolutionError : public SolverError {
public:
    using SolverError::SolverError;
};

/// Root finder could not bracket a sign change.
class BracketError : public SolverError {
public:
    using SolverError::SolverError;
};

/// Monte Carlo fit window has too few surviving paths.
class WindowError : public SolverError {
public:
    using SolverError::SolverError;
};

/// Every simulated path left before the first requested time.
class DegenerateCurveError : public SolverError {
public:
    using SolverError::SolverError;
};

/// Malformed or inconsistent run configuration.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace nleig
