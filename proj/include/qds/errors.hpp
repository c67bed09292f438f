#pragma once

#include <stdexcept>
#include <string>

namespace qds {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input: non-finite entries, bad dimensions, empty grids.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// A documented precondition of an operation does not hold
/// (e.g. a "Hermitian" argument that is far from Hermitian).
class ContractViolation : public Error {
 public:
  using Error::Error;
};

/// The truncated Fock space is too small for the requested state.
class TruncationTooSmall : public Error {
 public:
  TruncationTooSmall(const std::string& what, int required_dim)
      : Error(what), required_dim_(required_dim) {}
  int required_dim() const noexcept { return required_dim_; }

 private:
  int required_dim_;
};

/// Dense superoperator work beyond the supported size.
class ResourceLimit : public Error {
 public:
  using Error::Error;
};

/// Ground set of an operator proportional to the identity.
class DegenerateGroundSet : public Error {
 public:
  using Error::Error;
};

/// Adaptive integrator step size underflow.
class StiffnessError : public Error {
 public:
  StiffnessError(const std::string& what, double time) : Error(what), time_(time) {}
  double time() const noexcept { return time_; }

 private:
  double time_;
};

/// Renormalization drift above the fail threshold during propagation.
class TraceDriftError : public Error {
 public:
  using Error::Error;
};

}  // namespace qds
