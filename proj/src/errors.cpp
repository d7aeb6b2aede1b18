#include "torusforge/errors.hpp"

#include <fmt/format.h>

namespace torusforge {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::CompositionDivergence: return "CompositionDivergence";
    case ErrorKind::TailBlowup: return "TailBlowup";
    case ErrorKind::NonZeroAverage: return "NonZeroAverage";
    case ErrorKind::ResonantMode: return "ResonantMode";
    case ErrorKind::SmallDivisor: return "SmallDivisor";
    case ErrorKind::DefectiveMatrix: return "DefectiveMatrix";
    case ErrorKind::NonZeroDiagonalAverage: return "NonZeroDiagonalAverage";
    case ErrorKind::ExactResonance: return "ExactResonance";
    case ErrorKind::ContractionFailure: return "ContractionFailure";
    case ErrorKind::SingularR1: return "SingularR1";
    case ErrorKind::NonInvertibleCounterTermSystem: return "NonInvertibleCounterTermSystem";
    case ErrorKind::ClassViolation: return "ClassViolation";
    case ErrorKind::DegenerateTorsion: return "DegenerateTorsion";
    case ErrorKind::DivergenceDetected: return "DivergenceDetected";
    case ErrorKind::MaxItersExceeded: return "MaxItersExceeded";
    case ErrorKind::InsufficientData: return "InsufficientData";
    case ErrorKind::EigenvalueCollision: return "EigenvalueCollision";
    case ErrorKind::RankDeficientTwist: return "RankDeficientTwist";
    case ErrorKind::RootBracketingFailure: return "RootBracketingFailure";
    case ErrorKind::NoConvergence: return "NoConvergence";
    case ErrorKind::StructurallyExcluded: return "StructurallyExcluded";
    case ErrorKind::StepTooLarge: return "StepTooLarge";
    case ErrorKind::WindowTooShort: return "WindowTooShort";
    case ErrorKind::EscapedNeighborhood: return "EscapedNeighborhood";
  }
  return "Unknown";
}

std::string sci(double x) { return fmt::format("{:.3e}", x); }

}  // namespace torusforge
