#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace qshock {

/// Malformed configuration text. `line` is 1-based, 0 when unknown.
class SchemaError : public std::runtime_error {
public:
    SchemaError(const std::string& what, std::size_t line, std::string field = {})
        : std::runtime_error(what), line_(line), field_(std::move(field)) {}

    std::size_t line() const noexcept { return line_; }
    const std::string& field() const noexcept { return field_; }

private:
    std::size_t line_;
    std::string field_;
};

/// Well-formed input that violates a model invariant.
class ValidationError : public std::runtime_error {
public:
    ValidationError(std::string field, const std::string& what)
        : std::runtime_error(field + ": " + what), field_(std::move(field)) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

/// Numerical failure: a quadrature that did not reach its tolerance, a
/// probability outside [0, 1] by more than rounding, and similar.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what, double achieved_error = 0.0)
        : std::runtime_error(what), achieved_error_(achieved_error) {}

    double achieved_error() const noexcept { return achieved_error_; }

private:
    double achieved_error_;
};

/// Truncated Fock space larger than the configured budget.
class BudgetError : public std::runtime_error {
public:
    BudgetError(std::size_t required, std::size_t budget)
        : std::runtime_error("Hilbert space dimension " + std::to_string(required) +
                             " exceeds budget " + std::to_string(budget)),
          required_(required) {}

    std::size_t required() const noexcept { return required_; }

private:
    std::size_t required_;
};

} // namespace qshock
