#pragma once

#include <stdexcept>

namespace vidrl {

// Base class for every error the library raises.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Transcript or payload does not satisfy the protocol grammar.
struct ParseError : Error { using Error::Error; };
// Invalid configuration (bad parameter values, infeasible generator request).
struct ConfigError : Error { using Error::Error; };
// Malformed numeric domain input (inverted interval, non-finite value).
struct DomainError : Error { using Error::Error; };
// Trajectory round limit reached.
struct CapacityError : Error { using Error::Error; };
// Operation applied to a trajectory in the wrong state.
struct StateError : Error { using Error::Error; };
// Group-level operation on an empty group.
struct EmptyGroupError : Error { using Error::Error; };
// Predictions and ground truth cannot be matched by id.
struct AlignmentError : Error { using Error::Error; };
// Non-finite value in an optimization step.
struct NumericalError : Error { using Error::Error; };
// External judge endpoint failed after retries.
struct JudgeUnavailable : Error { using Error::Error; };
// External answerer endpoint failed.
struct ClientUnavailable : Error { using Error::Error; };
// Filesystem read/write failure.
struct IoError : Error { using Error::Error; };

}  // namespace vidrl
