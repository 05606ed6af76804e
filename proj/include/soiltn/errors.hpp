#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace soiltn {

// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad user input: malformed files, out-of-range flags, shape mismatches.
// The CLI maps these to exit code 2.
class ValidationError : public Error {
public:
    using Error::Error;
};

// Internal failure: non-convergence, divergence, broken state.
// The CLI maps these to exit code 3.
class ComputeError : public Error {
public:
    using Error::Error;
};

class ShapeError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class ParseError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class EmptyZoneError : public ValidationError {
public:
    explicit EmptyZoneError(int zone_id, const std::string& msg)
        : ValidationError(msg), zone(zone_id) {}
    int zone;
};

class InsufficientDataError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class DegenerateFitError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class OutOfRangeError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class DegenerateFeatureError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class TrainingError : public ComputeError {
public:
    explicit TrainingError(const std::string& msg, std::vector<double> log = {})
        : ComputeError(msg), loss_log(std::move(log)) {}
    std::vector<double> loss_log;
};

class ConvergenceError : public ComputeError {
public:
    explicit ConvergenceError(const std::string& msg, double residual = 0.0)
        : ComputeError(msg), max_violation(residual) {}
    double max_violation;
};

class SchemaError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

}  // namespace soiltn
