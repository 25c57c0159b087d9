#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dfc {

// Bad input shapes or values supplied by the caller.
class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// A documented precondition (unitarity, dominance, ...) does not hold.
class ContractError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

class FactorizationError : public std::runtime_error {
public:
    FactorizationError(const std::string& what, std::ptrdiff_t rows, std::ptrdiff_t cols)
        : std::runtime_error(what + " (" + std::to_string(rows) + "x" + std::to_string(cols) + ")"),
          rows_(rows), cols_(cols) {}
    std::ptrdiff_t rows() const noexcept { return rows_; }
    std::ptrdiff_t cols() const noexcept { return cols_; }

private:
    std::ptrdiff_t rows_;
    std::ptrdiff_t cols_;
};

class DiagonalizabilityError : public std::runtime_error {
public:
    DiagonalizabilityError(const std::string& what, double condition)
        : std::runtime_error(what), condition_(condition) {}
    double condition() const noexcept { return condition_; }

private:
    double condition_;
};

class InvertibilityError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class IdentificationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class FitError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class IntegrationError : public std::runtime_error {
public:
    IntegrationError(const std::string& what, std::ptrdiff_t step)
        : std::runtime_error(what + " at step " + std::to_string(step)), step_(step) {}
    std::ptrdiff_t step() const noexcept { return step_; }

private:
    std::ptrdiff_t step_;
};

}  // namespace dfc
