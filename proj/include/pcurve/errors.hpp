#pragma once

#include <stdexcept>
#include <string>

namespace pcurve {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// A spectrum (or matrix spectrum) left the p-convexity cone where the
/// operator or one of its derivatives was requested.
class NotInConeError : public Error {
public:
    explicit NotInConeError(const std::string& msg) : Error(msg) {}
};

/// A value escaped the range of IEEE doubles.
class OverflowError : public Error {
public:
    explicit OverflowError(const std::string& msg) : Error(msg) {}
};

/// Expression parse failure; `offset` is the byte position in the source.
class ParseError : public Error {
public:
    ParseError(const std::string& msg, std::size_t offset)
        : Error(msg + " (at byte " + std::to_string(offset) + ")"), offset(offset) {}
    std::size_t offset;
};

/// Runtime evaluation failure (log/sqrt of a negative number, division by zero).
class EvalDomainError : public Error {
public:
    explicit EvalDomainError(const std::string& msg) : Error(msg) {}
};

class GridError : public Error {
public:
    explicit GridError(const std::string& msg) : Error(msg) {}
};

/// Base for solver failures; carries no extra state.
class SolverError : public Error {
public:
    explicit SolverError(const std::string& msg) : Error(msg) {}
};

class NotAdmissibleError : public SolverError {
public:
    explicit NotAdmissibleError(const std::string& msg) : SolverError(msg) {}
};

class LineSearchError : public SolverError {
public:
    explicit LineSearchError(const std::string& msg) : SolverError(msg) {}
};

class LinearSolveError : public SolverError {
public:
    explicit LinearSolveError(const std::string& msg) : SolverError(msg) {}
};

class MaxIterationsError : public SolverError {
public:
    explicit MaxIterationsError(const std::string& msg) : SolverError(msg) {}
};

/// The homotopy could not advance; `last_t` is the last deformation
/// parameter at which Newton converged.
class HomotopyStallError : public SolverError {
public:
    HomotopyStallError(const std::string& msg, double last_t)
        : SolverError(msg), last_t(last_t) {}
    double last_t;
};

} // namespace pcurve
