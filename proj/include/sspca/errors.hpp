#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace sspca {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidInput : public Error {
public:
    using Error::Error;
};

class InvalidSpec : public Error {
public:
    using Error::Error;
};

/// Exhaustive enumeration refused because the problem is above the size guard.
class TooLarge : public Error {
public:
    using Error::Error;
};

/// An iterative solver ran out of iterations. Carries the best (or last)
/// iterate so the caller can decide whether it is usable.
class NotConverged : public Error {
public:
    NotConverged(const std::string& what, std::vector<double> iterate, double residual,
                 std::size_t iterations)
        : Error(what), iterate_(std::move(iterate)), residual_(residual), iterations_(iterations) {}

    const std::vector<double>& iterate() const noexcept { return iterate_; }
    double residual() const noexcept { return residual_; }
    std::size_t iterations() const noexcept { return iterations_; }

private:
    std::vector<double> iterate_;
    double residual_;
    std::size_t iterations_;
};

/// The truncated power iterate landed in the null space of the matrix.
class DegenerateIterate : public Error {
public:
    DegenerateIterate(const std::string& what, std::size_t iteration)
        : Error(what), iteration_(iteration) {}
    std::size_t iteration() const noexcept { return iteration_; }

private:
    std::size_t iteration_;
};

class EmptySupport : public Error {
public:
    using Error::Error;
};

/// Malformed text input. line is 1-based, 0 when not applicable.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line = 0, std::size_t column = 0)
        : Error(line ? what + " (line " + std::to_string(line) +
                           (column ? ", column " + std::to_string(column) : std::string()) + ")"
                     : what),
          line_(line), column_(column) {}
    std::size_t line() const noexcept { return line_; }
    std::size_t column() const noexcept { return column_; }

private:
    std::size_t line_;
    std::size_t column_;
};

}  // namespace sspca
