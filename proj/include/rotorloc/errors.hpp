#pragma once

#include <stdexcept>
#include <string>

namespace rotorloc {

// Error hierarchy. ConfigError covers anything wrong with static inputs
// (geometry, schemas, shapes); RuntimeError covers failures mid-computation.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct RuntimeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InvalidRoom : ConfigError {
  using ConfigError::ConfigError;
};
struct InvalidDrone : ConfigError {
  using ConfigError::ConfigError;
};
struct SourceOutsideRoom : RuntimeError {
  using RuntimeError::RuntimeError;
};
struct TargetOutsideRoom : ConfigError {
  using ConfigError::ConfigError;
};
struct LengthTooShort : RuntimeError {
  using RuntimeError::RuntimeError;
};
struct SampleRateMismatch : RuntimeError {
  using RuntimeError::RuntimeError;
};
struct ShapeMismatch : RuntimeError {
  using RuntimeError::RuntimeError;
};
struct LengthMismatch : RuntimeError {
  using RuntimeError::RuntimeError;
};
struct IndexOutOfRange : RuntimeError {
  using RuntimeError::RuntimeError;
};
struct DegeneratePosition : RuntimeError {
  using RuntimeError::RuntimeError;
};
struct PeriodMismatch : RuntimeError {
  using RuntimeError::RuntimeError;
};
struct EmptyBasis : ConfigError {
  using ConfigError::ConfigError;
};
struct EmptyDataset : RuntimeError {
  using RuntimeError::RuntimeError;
};
struct EmptyGrid : RuntimeError {
  using RuntimeError::RuntimeError;
};
struct IoError : RuntimeError {
  using RuntimeError::RuntimeError;
};

}  // namespace rotorloc
