#pragma once

#include <stdexcept>
#include <string>

namespace splitleap {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Reversible pair whose linearized decay rate is not positive.
class UnstablePair : public Error {
 public:
  using Error::Error;
};

/// Newton iteration for an implicit stage did not converge; callers reduce tau.
class NewtonDivergence : public Error {
 public:
  using Error::Error;
};

class NegativePropensity : public Error {
 public:
  using Error::Error;
};

class Infeasible : public Error {
 public:
  using Error::Error;
};

/// A (+) A is singular, typically tau sits on a spectral resonance.
class SingularSylvester : public Error {
 public:
  using Error::Error;
};

class SingularStage : public Error {
 public:
  using Error::Error;
};

class NoBracket : public Error {
 public:
  using Error::Error;
};

class TauUnderflow : public Error {
 public:
  using Error::Error;
};

class DivisionByZero : public Error {
 public:
  using Error::Error;
};

class NotMonomolecular : public Error {
 public:
  using Error::Error;
};

/// Too many paths of an ensemble failed.
class EnsembleFailure : public Error {
 public:
  using Error::Error;
};

}  // namespace splitleap
