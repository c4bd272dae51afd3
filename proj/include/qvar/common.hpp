// Shared types, error classes and accuracy knobs for the qvar library.
#pragma once

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace qvar {

using Cplx = std::complex<double>;

constexpr double kPi = 3.14159265358979323846264338327950288;

/** @brief Base class of every error raised by the library. */
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
    virtual const char* kind() const noexcept { return "error"; }
};

// Evaluation at a pole of Gamma (or of an L-factor built from it).
class PoleError : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "pole"; }
};

// Arguments outside the mathematical domain of an operation.
class DomainError : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "domain"; }
};

// An adaptive method could not meet its tolerance; carries the estimate reached.
class AccuracyError : public Error {
public:
    AccuracyError(const std::string& what, double achieved)
        : Error(what + " (achieved error estimate " + std::to_string(achieved) + ")"),
          achieved_(achieved) {}
    double achieved() const noexcept { return achieved_; }
    const char* kind() const noexcept override { return "accuracy-not-reached"; }
private:
    double achieved_;
};

// The coprimality / divisibility guard of an identity does not hold.
class ConditionViolated : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "condition-violated"; }
};

// A finite table (Hecke eigenvalues, spectral range) is too short.
class InsufficientRange : public Error {
public:
    InsufficientRange(const std::string& what, long long shortfall)
        : Error(what + " (shortfall " + std::to_string(shortfall) + ")"), shortfall_(shortfall) {}
    long long shortfall() const noexcept { return shortfall_; }
    const char* kind() const noexcept override { return "insufficient-range"; }
private:
    long long shortfall_;
};

// Two observables that cannot be paired in a variance form.
class IncompatibleSpec : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "incompatible-spec"; }
};

// Configuration / IO problems (mapped to exit code 2 by the CLI).
class ConfigError : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "config"; }
};

class ParseError : public ConfigError {
public:
    using ConfigError::ConfigError;
    const char* kind() const noexcept override { return "parse"; }
};

class SchemaError : public ConfigError {
public:
    using ConfigError::ConfigError;
    const char* kind() const noexcept override { return "schema"; }
};

class ValidationError : public ConfigError {
public:
    using ConfigError::ConfigError;
    const char* kind() const noexcept override { return "validation"; }
};

/** @brief Accuracy knobs for the special functions and their quadratures. */
struct SpecialFnAccuracy {
    double abs_tol = 1e-12;
    double rel_tol = 1e-10;
    int max_nodes = 4096;

    void validate() const {
        if (!(abs_tol > 0) || !(rel_tol > 0) || max_nodes < 16)
            throw DomainError("SpecialFnAccuracy: tolerances must be positive and max_nodes >= 16");
    }
};

} // namespace qvar
