#pragma once

#include <stdexcept>
#include <string>

namespace mcinv {

/// Bad shapes, out-of-range indices, nonsensical hyperparameters.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A numerical object could not be built (e.g. a precision that is not SPD).
class ConstructionFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A decomposition or solve failed where theory says it cannot.
class InternalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A NaN or Inf showed up during loss/gradient evaluation.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// G has no left inverse (rank < m).
class NoLeftInverse : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// G has no right inverse (rank < n).
class NoRightInverse : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Centered data does not have full row rank.
class InsufficientData : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UndefinedMetric : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Malformed configuration or CSV input; the message names line and key.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace mcinv
