#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace torusforge {

enum class ErrorKind {
  DimensionMismatch,
  CompositionDivergence,
  TailBlowup,
  NonZeroAverage,
  ResonantMode,
  SmallDivisor,
  DefectiveMatrix,
  NonZeroDiagonalAverage,
  ExactResonance,
  ContractionFailure,
  SingularR1,
  NonInvertibleCounterTermSystem,
  ClassViolation,
  DegenerateTorsion,
  DivergenceDetected,
  MaxItersExceeded,
  InsufficientData,
  EigenvalueCollision,
  RankDeficientTwist,
  RootBracketingFailure,
  NoConvergence,
  StructurallyExcluded,
  StepTooLarge,
  WindowTooShort,
  EscapedNeighborhood,
};

std::string_view to_string(ErrorKind kind);

// Every failure of a numerical routine; usage errors use std::invalid_argument.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(ErrorKind kind, const std::string& detail)
      : std::runtime_error(std::string(to_string(kind)) + ": " + detail), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

// Scientific notation for error messages.
std::string sci(double x);

[[noreturn]] inline void fail(ErrorKind kind, const std::string& detail) {
  throw NumericalError(kind, detail);
}

}  // namespace torusforge
