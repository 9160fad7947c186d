#pragma once

#include <stdexcept>
#include <string>

namespace lanecheck {

/// Base class for every error raised by the harness.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input text (domain model, controller spec, scenario, CSV).
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Well-formed input that violates a semantic rule (unknown attribute,
/// empty enumeration, value outside its domain, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A constraint set, tuple or partial assignment admits no valid completion.
class UnsatisfiableError : public DomainError {
 public:
  using DomainError::DomainError;
};

/// A bounded search or sampling loop ran out of budget before deciding.
class BudgetExceeded : public Error {
 public:
  using Error::Error;
};

/// Invalid experiment or controller configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Training data unsuitable for a learner (too few vectors, one label only,
/// schema mismatch).
class DataError : public Error {
 public:
  using Error::Error;
};

}  // namespace lanecheck
