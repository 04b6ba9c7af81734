#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace taskseq {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Inverse kinematics target outside the manipulator workspace.
struct UnreachableError : Error {
  using Error::Error;
};

/// Iterative solver hit its iteration cap without meeting tolerance.
struct NoConvergenceError : Error {
  using Error::Error;
};

/// Feature extraction requested with no designated target object.
struct MissingTargetError : Error {
  using Error::Error;
};

/// Invalid static configuration (pipeline order, train config bounds, ...).
struct ConfigurationError : Error {
  using Error::Error;
};

/// A previous end state does not match a task's declared initial pattern.
struct IncompatibleStateError : Error {
  using Error::Error;
};

/// Degenerate input to a fitting routine (e.g. collinear circle points).
struct IllConditionedError : Error {
  using Error::Error;
};

/// State decoding failure; carries the byte offset of the defect.
struct MalformedStateError : Error {
  MalformedStateError(const std::string& what, std::size_t offset)
      : Error(what + " (byte " + std::to_string(offset) + ")"),
        byte_offset(offset) {}
  std::size_t byte_offset = 0;
};

/// Remote engine transport failures.
struct WireError : Error {
  using Error::Error;
};
struct TimeoutError : WireError {
  using WireError::WireError;
};
struct DisconnectedError : WireError {
  using WireError::WireError;
};

/// An engine failed during a pipeline step; annotated with the role.
struct EngineStepError : Error {
  EngineStepError(const std::string& role, const std::string& what)
      : Error("[" + role + "] " + what), role_name(role) {}
  std::string role_name;
};

/// Training environment could not produce a feasible reset.
struct ResetExhaustedError : Error {
  using Error::Error;
};

/// API misuse that would silently corrupt state (e.g. step after done).
struct ContractViolationError : Error {
  using Error::Error;
};

}  // namespace taskseq
