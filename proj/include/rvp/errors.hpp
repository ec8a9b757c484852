#pragma once

#include <stdexcept>
#include <string>

namespace rvp {

/// Input outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Operation not defined for the requested configuration.
class UnsupportedError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Invalid experiment or resolution configuration.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Step-size control failed to meet tolerance above the minimum step.
class StiffnessError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// NaN/Inf or an integrator breakdown.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// E <= min Psi_L: no radial motion exists for this (E, L).
class NoOrbitError : public DomainError {
public:
    using DomainError::DomainError;
};

/// E at or above the escape energy: the orbit is not bounded.
class UnboundOrbitError : public DomainError {
public:
    using DomainError::DomainError;
};

}  // namespace rvp
