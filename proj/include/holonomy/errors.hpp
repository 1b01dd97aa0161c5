#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace holonomy {

/// Failure categories surfaced by the library. The CLI prints these names in
/// its machine-readable error records.
enum class ErrorKind {
    NotClosed,
    TooFewSamples,
    LengthMismatch,
    InvalidArgument,
    GapTooSmall,
    HermiticityViolation,
    PoleProximity,
    NotNormalized,
    NotUnitary,
    ZeroField,
    EllipticViolation,
    ModeCollapse,
    OmegaImaginary,
    WeakCouplingViolated,
    NonAdiabatic,
    OverlapTooSmall,
    ConfigInvalid,
};

std::string_view to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

/// Raised when an adjacent-level gap falls below tolerance.
class GapTooSmallError : public Error {
public:
    GapTooSmallError(std::size_t sample, std::size_t level, double gap);
    std::size_t sample;
    std::size_t level;
    double gap;
};

/// Raised when a frequency-squared quantity is not positive at some loop sample.
class EllipticViolationError : public Error {
public:
    EllipticViolationError(std::size_t sample, double value, const std::string& what);
    std::size_t sample;
    double value;
};

}  // namespace holonomy
