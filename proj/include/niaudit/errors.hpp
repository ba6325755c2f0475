#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace niaudit {

enum class ErrorKind {
    NonSquare,
    NotSymmetric,
    DimensionMismatch,
    NonFinite,
    PoleOnGrid,
    PoleAtOrigin,
    ImaginaryAxisPole,
    NotHurwitz,
    SingularA,
    CertificateInvalid,
    SingularJacobian,
    MaxIterations,
    NewtonFailure,
    Cond1Violated,
    AssumptionFailed,
    ParseError,
    InvalidArgument,
};

std::string_view to_string(ErrorKind kind);

/// Single exception type for the toolkit; `kind()` identifies the failure class.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

/// Raised by the integrator when the state leaves the finite range.
class BlowUp : public Error {
public:
    BlowUp(double time, const std::string& what) : Error(ErrorKind::NonFinite, what), time_(time) {}
    [[nodiscard]] double time() const noexcept { return time_; }

private:
    double time_;
};

/// Newton failure inside a multi-stage computation; `stage()` is the 1-based stage index.
class StageFailure : public Error {
public:
    StageFailure(int stage, const std::string& what) : Error(ErrorKind::NewtonFailure, what), stage_(stage) {}
    [[nodiscard]] int stage() const noexcept { return stage_; }

private:
    int stage_;
};

}  // namespace niaudit
