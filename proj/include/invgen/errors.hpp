#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace invgen {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed expression text. `position` is a 0-based character offset.
class ParseError : public Error {
public:
    ParseError(const std::string& msg, std::size_t position)
        : Error("position " + std::to_string(position) + ": " + msg), position_(position) {}
    std::size_t position() const noexcept { return position_; }

private:
    std::size_t position_;
};

/// Domain error during numeric evaluation (division by zero, point outside the box).
class EvalError : public Error {
public:
    using Error::Error;
};

class ChartMismatch : public Error {
public:
    ChartMismatch() : Error("sections live on different charts") {}
};

/// Input that violates a structural precondition (I° condition, antisymmetry, ...).
class InvalidInput : public Error {
public:
    using Error::Error;
};

/// Base for failures raised by the frame construction pipeline; carries the
/// stage label ("Step 1" .. "Step 4") and the point where it happened.
class StageError : public Error {
public:
    StageError(std::string stage, std::vector<double> point, const std::string& msg)
        : Error(stage + ": " + msg), stage_(std::move(stage)), point_(std::move(point)) {}
    const std::string& stage() const noexcept { return stage_; }
    const std::vector<double>& point() const noexcept { return point_; }

private:
    std::string stage_;
    std::vector<double> point_;
};

/// A bracket hypothesis fails numerically: the decomposition residual exceeds tol.
class HypothesisViolated : public StageError {
public:
    HypothesisViolated(std::string stage, std::vector<double> point, double residual, const std::string& msg)
        : StageError(std::move(stage), std::move(point), msg), residual_(residual) {}
    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

/// The tilde block of the generators is rank deficient, so the coefficient
/// matrices B_l are not unique.
class NonUniqueCoefficients : public StageError {
public:
    using StageError::StageError;
};

/// Singular fundamental matrix / H, or non-finite values during integration.
class NumericalBreakdown : public StageError {
public:
    using StageError::StageError;
};

}  // namespace invgen
