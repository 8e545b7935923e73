#pragma once

#include <stdexcept>
#include <string>

namespace besq {

// Base class for every error raised by the library. Callers that only care
// about "something in besq went wrong" catch this.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed arguments: non-finite entries, empty vectors, mismatched sizes.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

// A scalar function was asked for a value outside its domain (spectral_apply).
class DomainError : public Error {
 public:
  using Error::Error;
};

// Non-positive time step or horizon.
class InvalidGrid : public Error {
 public:
  using Error::Error;
};

// Exactly colliding particles with no regularization.
class SingularDrift : public Error {
 public:
  using Error::Error;
};

// Sigma (or u) is not positive definite.
class InvalidSigma : public Error {
 public:
  using Error::Error;
};

// Wallach point whose x0 is not positive semidefinite.
class InvalidPoint : public Error {
 public:
  using Error::Error;
};

// Dense factorization or eigensolver did not converge / hit a singular pivot.
class NumericalError : public Error {
 public:
  using Error::Error;
};

// Experiment parameters outside the regime the experiment is defined for.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

}  // namespace besq
