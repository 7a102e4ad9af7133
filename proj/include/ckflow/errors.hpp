#pragma once

#include <stdexcept>
#include <string>

namespace ckflow {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// failures that stop a running flow
struct FlowError : Error {
  using Error::Error;
};

struct DomainExit : FlowError {
  using FlowError::FlowError;
};
struct MeshDegenerate : FlowError {
  using FlowError::FlowError;
};
struct StarshapeLost : FlowError {
  using FlowError::FlowError;
};
struct InvariantViolation : FlowError {
  using FlowError::FlowError;
};
struct EllipticityLost : FlowError {
  using FlowError::FlowError;
};
struct GradientBoundExceeded : FlowError {
  using FlowError::FlowError;
};

struct ScheduleInfeasible : Error {
  using Error::Error;
};
struct SeedInfeasible : Error {
  using Error::Error;
};
struct ProfileNotMonotone : Error {
  using Error::Error;
};
struct ConfigError : Error {
  using Error::Error;
};

}  // namespace ckflow
