#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace condbm {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Argument outside the mathematical domain of a formula (h < 0, x > h, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

// A series did not reach its tail tolerance within the allowed number of terms.
class TruncationError : public Error {
public:
    TruncationError(const std::string& what, int terms_used, double last_term)
        : Error(what), terms_used_(terms_used), last_term_(last_term) {}
    int terms_used() const noexcept { return terms_used_; }
    double last_term() const noexcept { return last_term_; }

private:
    int terms_used_;
    double last_term_;
};

// Quadrature or root finding failed to reach the requested accuracy, or a
// result lost all significant digits.
class NumericError : public Error {
public:
    NumericError(const std::string& what, double achieved = 0.0)
        : Error(what), achieved_(achieved) {}
    double achieved() const noexcept { return achieved_; }

private:
    double achieved_;
};

// Normalizing density fell below the representable range.
class UnderflowError : public NumericError {
public:
    using NumericError::NumericError;
};

class CapacityError : public Error {
public:
    CapacityError(const std::string& what, std::size_t required_bytes)
        : Error(what), required_bytes_(required_bytes) {}
    std::size_t required_bytes() const noexcept { return required_bytes_; }

private:
    std::size_t required_bytes_;
};

// Malformed or inconsistent input data; line is 1-based, 0 when not tied to a line.
class DataError : public Error {
public:
    DataError(const std::string& what, std::size_t line = 0) : Error(what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class BracketError : public Error {
public:
    BracketError(const std::string& what, double loglik_low, double loglik_high)
        : Error(what), loglik_low_(loglik_low), loglik_high_(loglik_high) {}
    double loglik_low() const noexcept { return loglik_low_; }
    double loglik_high() const noexcept { return loglik_high_; }

private:
    double loglik_low_;
    double loglik_high_;
};

}  // namespace condbm
