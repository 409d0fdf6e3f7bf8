#pragma once

#include <stdexcept>
#include <string>

namespace rhlearn {

/// Base class for all rhlearn errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

/// Equality constraints Aeq w = beq have no solution.
class InfeasibleConstraints : public Error {
 public:
  using Error::Error;
};

/// The cost Hessian is not positive definite on the constraint null space.
class IndefiniteReducedHessian : public Error {
 public:
  using Error::Error;
};

/// A factorization broke down or produced non-finite values.
class NumericalFailure : public Error {
 public:
  using Error::Error;
};

/// Prediction requested beyond the horizon the maps were built for.
class HorizonExceeded : public Error {
 public:
  using Error::Error;
};

/// Requested terminal state is not reachable within the horizon.
class TerminalInfeasible : public Error {
 public:
  using Error::Error;
};

/// No point of the lambda grid yielded a controllable blend.
class RestorationFailed : public Error {
 public:
  using Error::Error;
};

class EmptyLog : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

}  // namespace rhlearn
