#ifndef SIV_ERRORS_HPP
#define SIV_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace siv {

// Base class for everything thrown by this library.
struct SimulationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Configuration / input validation problems (CLI exit code 1).
struct ValidationError : SimulationError {
  using SimulationError::SimulationError;
};

struct ConfigError : ValidationError {
  using ValidationError::ValidationError;
};

// A parameter set that cannot satisfy its defining constraints. The message
// names the violated relation.
struct ConstraintInfeasibleError : ValidationError {
  using ValidationError::ValidationError;
};

// Numerical failures (CLI exit code 2).
struct NumericalError : SimulationError {
  using SimulationError::SimulationError;
};

struct StiffnessError : NumericalError {
  using NumericalError::NumericalError;
};

struct IntegrationAccuracyError : NumericalError {
  using NumericalError::NumericalError;
};

struct FitDiagnosticError : NumericalError {
  using NumericalError::NumericalError;
};

struct UndefinedVisibilityError : NumericalError {
  using NumericalError::NumericalError;
};

}  // namespace siv

#endif
