#pragma once

#include <stdexcept>
#include <string>

namespace fcev {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A lookup or query fell outside the domain of a map, table or axis.
class RangeError : public Error {
public:
    RangeError(std::string axis, const std::string& what)
        : Error(what), axis_(std::move(axis)) {}
    const std::string& axis() const noexcept { return axis_; }

private:
    std::string axis_;
};

/// Requested battery power exceeds what the pack can deliver (negative discriminant).
class InfeasiblePowerError : public Error {
public:
    using Error::Error;
};

/// Invalid configuration or training data.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Malformed input file. `row()` is 1-based (header is row 1), 0 when unknown.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t row = 0) : Error(what), row_(row) {}
    std::size_t row() const noexcept { return row_; }

private:
    std::size_t row_;
};

/// Explicit-table grid larger than the configured memory budget.
class BudgetError : public Error {
public:
    using Error::Error;
};

/// Polynomial evaluated outside its fitted domain.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Least-squares system is rank deficient.
class FitError : public Error {
public:
    using Error::Error;
};

/// Vector length does not match the configured shape.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// Controller bounds admit no feasible control, or linearization point is infeasible.
class InfeasibleProblemError : public Error {
public:
    using Error::Error;
};

/// Filesystem failure; the message carries the path.
class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace fcev
