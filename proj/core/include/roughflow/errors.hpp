#pragma once

#include <stdexcept>
#include <string>

namespace roughflow {

// Error taxonomy. Everything derives from Error so callers can catch the
// whole family; the concrete types match the failure modes the operations
// document (degenerate charts, bad coefficients, solver trouble, ...).
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DegenerateChartError : Error { using Error::Error; };
struct OutOfTubeError : Error { using Error::Error; };
struct InvalidCoefficientsError : Error { using Error::Error; };
struct ResolutionError : Error { using Error::Error; };
struct GeometryError : Error { using Error::Error; };

struct SolverBreakdownError : Error { using Error::Error; };
struct ToleranceNotReachedError : Error {
  ToleranceNotReachedError(const std::string& what, double residual)
      : Error(what), final_residual(residual) {}
  double final_residual;
};

struct IncompatibleSolutionsError : Error { using Error::Error; };
struct IncompatibleFieldsError : Error { using Error::Error; };
struct IllPosedBcError : Error { using Error::Error; };

struct CompatibilityError : Error { using Error::Error; };
struct DecompositionError : Error { using Error::Error; };
struct FieldCorruptError : Error { using Error::Error; };

struct ConfigError : Error { using Error::Error; };

}  // namespace roughflow
