#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace wgsf {

/// Base of every error raised by the library. `exit_code()` maps onto the
/// CLI contract: 2 for invalid input, 3 for numerical failure.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
    virtual int exit_code() const noexcept { return 3; }
};

/// Bad configuration or file content.
class ValidationError : public Error {
public:
    explicit ValidationError(const std::string& what, std::size_t line = 0)
        : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
    int exit_code() const noexcept override { return 2; }
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// Argument outside the mathematical domain of a formula.
class DomainError : public Error {
public:
    using Error::Error;
    int exit_code() const noexcept override { return 2; }
};

class MatrixNotPsdError : public Error {
public:
    MatrixNotPsdError(double eigenvalue, double max_eigenvalue)
        : Error("matrix not positive semidefinite: eigenvalue " + std::to_string(eigenvalue) +
                " (largest " + std::to_string(max_eigenvalue) + ")"),
          eigenvalue_(eigenvalue) {}
    double eigenvalue() const noexcept { return eigenvalue_; }

private:
    double eigenvalue_;
};

class IntegrationDivergedError : public Error {
public:
    IntegrationDivergedError(const std::string& what, long long step, long long trajectory = -1)
        : Error(what + " (step " + std::to_string(step) +
                (trajectory >= 0 ? ", trajectory " + std::to_string(trajectory) : std::string{}) + ")"),
          step_(step), trajectory_(trajectory) {}
    long long step() const noexcept { return step_; }
    long long trajectory() const noexcept { return trajectory_; }

private:
    long long step_;
    long long trajectory_;
};

class SymbolizationError : public Error {
public:
    using Error::Error;
};

class UndefinedDirectionalityError : public Error {
public:
    UndefinedDirectionalityError() : Error("directionality undefined: both peak rates are zero") {}
};

class EmptyResultError : public Error {
public:
    using Error::Error;
};

class FwhmUndefinedError : public Error {
public:
    using Error::Error;
};

class InsufficientDataError : public Error {
public:
    using Error::Error;
};

class OracleIntegrityError : public Error {
public:
    using Error::Error;
};

}  // namespace wgsf
