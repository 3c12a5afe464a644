#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace polaron {

/// Base of every error raised by the library. The CLI maps the concrete
/// subclasses onto process exit codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid or out-of-range configuration (exit code 2).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Requested problem is too large for the configured guard.
class SizeError : public ConfigError {
public:
    SizeError(const std::string& what, unsigned long long dimension)
        : ConfigError(what), dimension_(dimension) {}
    unsigned long long dimension() const { return dimension_; }

private:
    unsigned long long dimension_;
};

/// Inputs that violate an operation's mathematical domain.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Caller combined objects that do not belong together (e.g. fields on
/// different grids).
class UsageError : public Error {
public:
    using Error::Error;
};

/// Numerical solver failure (exit code 3). Carries the tail of whatever
/// trace the solver was monitoring so callers can report it.
class SolverError : public Error {
public:
    explicit SolverError(const std::string& what, std::vector<double> trace = {})
        : Error(what), trace_(std::move(trace)) {}
    const std::vector<double>& trace() const { return trace_; }

private:
    std::vector<double> trace_;
};

/// Quadrature or discretization self-check failed.
class AccuracyError : public SolverError {
public:
    using SolverError::SolverError;
};

/// Post-processing failure (exit code 4).
class AnalysisError : public Error {
public:
    using Error::Error;
};

}  // namespace polaron
