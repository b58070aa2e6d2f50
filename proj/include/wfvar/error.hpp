#pragma once

#include <stdexcept>
#include <string>

namespace wfvar {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the domain of an operation (time outside a trajectory,
/// non-monotone times, empty input).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A trajectory or velocity reaches or exceeds the speed of light.
class SuperluminalError : public Error {
 public:
  using Error::Error;
};

/// A light cone leaves the known part of a trajectory.
class InsufficientHistoryError : public Error {
 public:
  explicit InsufficientHistoryError(const std::string& what)
      : Error("insufficient history: " + what) {}
};

/// An iterative solver did not reach its tolerance.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

/// Two charges meet on a light cone (r below the collision cutoff).
class CollisionError : public Error {
 public:
  using Error::Error;
};

/// A caller-supplied object violates a documented precondition.
class ContractError : public Error {
 public:
  using Error::Error;
};

/// No post-jump velocity restores momentum and energy current continuity.
class InfeasibleJumpError : public Error {
 public:
  using Error::Error;
};

/// Too few (or coplanar) direction samples for a rigidity test.
class InsufficientSamplingError : public Error {
 public:
  using Error::Error;
};

/// Too many undefined far-field samples on the integration sphere.
class CoverageError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration (node counts, scenario options, file contents).
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace wfvar
