#pragma once

#include <stdexcept>
#include <string>

namespace citymf {

// Base of every error the library raises. The CLI maps the concrete
// subclass onto an exit code.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Caller passed arguments that violate an operation's precondition
// (dimension mismatch, out-of-range index, bad fraction, ...).
class InvalidArgument : public Error {
public:
    using Error::Error;
};

// Malformed or missing input data (files, records, config keys).
class InputError : public Error {
public:
    using Error::Error;
};

// The numerics could not produce a valid answer.
class NumericalError : public Error {
public:
    using Error::Error;
};

// Regression design matrix is rank deficient.
class IdentifiabilityError : public NumericalError {
public:
    IdentifiabilityError(const std::string& column, const std::string& detail)
        : NumericalError("gravity fit not identifiable: column '" + column +
                         "' is collinear with the others (" + detail + ")"),
          column_(column) {}

    const std::string& column() const noexcept { return column_; }

private:
    std::string column_;
};

}  // namespace citymf
