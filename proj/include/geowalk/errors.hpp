#pragma once

#include <stdexcept>
#include <string>

namespace geowalk {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Bad document, bad flag, dimension mismatch.
struct InputError : Error {
  using Error::Error;
};

// Point outside the strict interior, or too close to the boundary.
struct DomainError : Error {
  using Error::Error;
};

struct RankError : InputError {
  using InputError::InputError;
};

// Cholesky/LU failure on a matrix that should be well conditioned.
struct FactorizationError : Error {
  using Error::Error;
};

// Fixed-point iteration failed to contract or left its accuracy budget.
struct NonContractionError : Error {
  using Error::Error;
};

struct NonFiniteError : Error {
  using Error::Error;
};

// Iterative method hit its cap (analytic center, phase one, LP).
struct ConvergenceError : Error {
  using Error::Error;
};

}  // namespace geowalk
