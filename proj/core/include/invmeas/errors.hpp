#pragma once

#include <stdexcept>
#include <string>

namespace invmeas {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NonFiniteInput : Error { using Error::Error; };
struct NonFiniteState : Error { using Error::Error; };
struct DegreeOrder : Error { using Error::Error; };
struct DegreeOverflow : Error { using Error::Error; };
struct DimensionMismatch : Error { using Error::Error; };
struct DimensionNotOne : Error { using Error::Error; };
struct OrbitEscaped : Error { using Error::Error; };
struct NoCrossings : Error { using Error::Error; };
struct NewtonDiverged : Error { using Error::Error; };
struct ExtractionFailed : Error { using Error::Error; };
struct SingularReference : Error { using Error::Error; };
struct NumericalBreakdown : Error { using Error::Error; };
struct ConfigError : Error { using Error::Error; };

}  // namespace invmeas
