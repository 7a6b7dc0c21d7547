#pragma once

#include <stdexcept>
#include <string>

namespace phipd {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Caller passed arguments that violate a precondition (shape, range, flags).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Input data is malformed or unusable (bad file, non-finite pixel, zero image).
class DataError : public Error {
 public:
  using Error::Error;
};

/// A numerical contract broke during computation.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Inverse transform of a field that is not Hermitian-symmetric.
class SymmetryViolation : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Input has no usable phase (identically zero spectrum).
class DegeneratePhase : public DataError {
 public:
  using DataError::DataError;
};

/// Training produced a non-finite loss or gradient.
class TrainingDivergence : public NumericalError {
 public:
  TrainingDivergence(const std::string& what, long iteration)
      : NumericalError(what), iteration_(iteration) {}
  long iteration() const noexcept { return iteration_; }

 private:
  long iteration_;
};

}  // namespace phipd
