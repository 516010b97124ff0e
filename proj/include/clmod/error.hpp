#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace clmod {

// Base of every error raised by the library. The CLI maps the subclasses
// onto process exit codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
public:
    using Error::Error;
};

class SingularMatrixError : public Error {
public:
    using Error::Error;
};

class DomainError : public Error {
public:
    using Error::Error;
};

// Non-finite values, divergence, degenerate mixture components.
class NumericalError : public Error {
public:
    using Error::Error;
};

// Training produced a non-finite loss term.
class DivergenceError : public NumericalError {
public:
    DivergenceError(std::size_t epoch, std::string term)
        : NumericalError("training diverged at epoch " + std::to_string(epoch) + ": term '" + term +
                         "' is not finite"),
          epoch_(epoch),
          term_(std::move(term)) {}

    std::size_t epoch() const { return epoch_; }
    const std::string& term() const { return term_; }

private:
    std::size_t epoch_;
    std::string term_;
};

// File parsing and I/O failures.
class DataError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace clmod
