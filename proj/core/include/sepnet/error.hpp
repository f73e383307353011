#pragma once

#include <stdexcept>
#include <string>

namespace sepnet {

/// Invalid inputs or configuration detected before any simulation runs.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Distributions on different alphabets were compared.
class AlphabetMismatch : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// Distortion target below the minimum achievable distortion.
class InfeasibleDistortion : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// A codebook would exceed the configured cardinality cap.
class CodebookTooLarge : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// A separation plan violates the rate conditions it depends on.
class PlanInfeasible : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// A pair that was supposed to be untouched by a transformation changed.
class InterferenceDetected : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace sepnet
