#pragma once

#include <stdexcept>
#include <string>

namespace biharm {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Invalid user input: bad ranks, mismatched dimensions, violated preconditions.
class ConstraintError : public Error {
public:
  using Error::Error;
};

class UnsupportedRank : public ConstraintError {
public:
  using ConstraintError::ConstraintError;
};

class DimensionMismatch : public ConstraintError {
public:
  using ConstraintError::ConstraintError;
};

/// Configuration / file-format problems (CLI exit code 1).
class ConfigError : public Error {
public:
  using Error::Error;
};

/// Numerical failures (CLI exit code 2).
class NumericalError : public Error {
public:
  using Error::Error;
};

/// Evaluations that no tensor of the requested class reproduces.
class InconsistentOracle : public NumericalError {
public:
  using NumericalError::NumericalError;
};

class SingularSystem : public NumericalError {
public:
  using NumericalError::NumericalError;
};

class IllConditionedFit : public NumericalError {
public:
  using NumericalError::NumericalError;
};

class DivergenceError : public NumericalError {
public:
  using NumericalError::NumericalError;
};

class UnderDetermined : public NumericalError {
public:
  using NumericalError::NumericalError;
};

/// Remainder profile that fails to decay in 1/h.
class DecayViolation : public NumericalError {
public:
  using NumericalError::NumericalError;
};

class InvalidTestFunction : public NumericalError {
public:
  using NumericalError::NumericalError;
};

/// A probe matrix that should be injective is not; indicates a library bug.
class InternalError : public Error {
public:
  using Error::Error;
};

}  // namespace biharm
