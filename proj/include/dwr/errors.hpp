#pragma once

#include <stdexcept>
#include <string>

namespace dwr {

/// Argument outside the mathematical domain of an operation (bad bounds,
/// point outside the mesh, non-positive estimator).
class DomainError : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

/// Inconsistent use of the API (mesh mismatch, missing recovery, ...).
class UsageError : public std::logic_error {
public:
  using std::logic_error::logic_error;
};

/// Coefficient data that cannot be evaluated.
class DataError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// An iterative solve that could not deliver a usable answer.
class SolverError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class ShiftRejectedError : public SolverError {
public:
  using SolverError::SolverError;
};

class UnsupportedSpectrumError : public SolverError {
public:
  using SolverError::SolverError;
};

class NormalizationError : public SolverError {
public:
  using SolverError::SolverError;
};

} // namespace dwr
