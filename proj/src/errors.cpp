#include "holonomy/errors.hpp"

#include <sstream>

namespace holonomy {

std::string_view to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::NotClosed: return "NotClosed";
        case ErrorKind::TooFewSamples: return "TooFewSamples";
        case ErrorKind::LengthMismatch: return "LengthMismatch";
        case ErrorKind::InvalidArgument: return "InvalidArgument";
        case ErrorKind::GapTooSmall: return "GapTooSmall";
        case ErrorKind::HermiticityViolation: return "HermiticityViolation";
        case ErrorKind::PoleProximity: return "PoleProximity";
        case ErrorKind::NotNormalized: return "NotNormalized";
        case ErrorKind::NotUnitary: return "NotUnitary";
        case ErrorKind::ZeroField: return "ZeroField";
        case ErrorKind::EllipticViolation: return "EllipticViolation";
        case ErrorKind::ModeCollapse: return "ModeCollapse";
        case ErrorKind::OmegaImaginary: return "OmegaImaginary";
        case ErrorKind::WeakCouplingViolated: return "WeakCouplingViolated";
        case ErrorKind::NonAdiabatic: return "NonAdiabatic";
        case ErrorKind::OverlapTooSmall: return "OverlapTooSmall";
        case ErrorKind::ConfigInvalid: return "ConfigInvalid";
    }
    return "Unknown";
}

namespace {
std::string gap_message(std::size_t sample, std::size_t level, double gap) {
    std::ostringstream os;
    os << "gap between levels " << level << " and " << level + 1 << " at sample " << sample
       << " is " << gap;
    return os.str();
}

std::string elliptic_message(std::size_t sample, double value, const std::string& what) {
    std::ostringstream os;
    os << what << " = " << value << " is not positive at sample " << sample;
    return os.str();
}
}  // namespace

GapTooSmallError::GapTooSmallError(std::size_t s, std::size_t l, double g)
    : Error(ErrorKind::GapTooSmall, gap_message(s, l, g)), sample(s), level(l), gap(g) {}

EllipticViolationError::EllipticViolationError(std::size_t s, double v, const std::string& what)
    : Error(ErrorKind::EllipticViolation, elliptic_message(s, v, what)), sample(s), value(v) {}

}  // namespace holonomy
