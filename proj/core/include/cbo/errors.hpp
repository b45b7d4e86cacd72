#pragma once

#include <stdexcept>
#include <string>

namespace cbo {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A point was evaluated outside the problem's bound constraints.
class DomainError : public Error {
 public:
  using Error::Error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class EmptyDatasetError : public Error {
 public:
  using Error::Error;
};

/// Appending a sample whose x is bitwise-identical to an existing one.
class DuplicateSampleError : public Error {
 public:
  using Error::Error;
};

/// The Gram matrix stayed indefinite after nugget escalation.
class FitError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace cbo
