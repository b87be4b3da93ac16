#pragma once

#include <stdexcept>
#include <string>

namespace mfgp {

/// Bad shapes, non-finite data, unknown names.
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Cholesky failure after the jitter ladder is exhausted, or a failed optimization.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A low-fidelity evaluator was asked for a point outside its declared domain.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Non-finite state during ODE integration.
class IntegrationError : public std::runtime_error {
public:
    IntegrationError(const std::string& what, long step) : std::runtime_error(what), step_(step) {}
    long step() const { return step_; }

private:
    long step_;
};

/// Configuration schema violation; `field()` names the offending key.
class ValidationError : public std::runtime_error {
public:
    ValidationError(std::string field, const std::string& what)
        : std::runtime_error(field + ": " + what), field_(std::move(field))
    {
    }
    const std::string& field() const { return field_; }

private:
    std::string field_;
};

/// A file could not be read or written.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An experiment cell lost more than half of its trials.
class ExperimentError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace mfgp
