#pragma once

#include <stdexcept>
#include <string>

namespace gencs {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Incompatible tensor/vector shapes. The message names both shapes.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// Invalid argument value (negative sparsity, std <= 0, bad config field, ...).
class ParameterError : public Error {
public:
    using Error::Error;
};

/// A caller violated an API contract (non-scalar gradient root, unknown leaf,
/// conditioning mismatch, trace without retained iterates, ...).
class ContractError : public Error {
public:
    using Error::Error;
};

/// NaN/Inf produced where a finite value is required.
class NumericError : public Error {
public:
    using Error::Error;
};

/// Checkpoint file missing, corrupt, or of an unsupported version.
class CheckpointError : public Error {
public:
    using Error::Error;
};

/// Training produced a non-finite loss; carries the step index.
class TrainingDiverged : public Error {
public:
    TrainingDiverged(const std::string& what, long step)
        : Error(what + " (step " + std::to_string(step) + ")"), step_(step) {}
    long step() const { return step_; }

private:
    long step_;
};

} // namespace gencs
