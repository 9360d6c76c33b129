#pragma once

#include <stdexcept>
#include <string>

namespace bearing_obs {

/// Base of every error raised by the library. Preconditions on plain
/// arguments (non-positive step, bad gains) use std::invalid_argument.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// |x| too small for x/|x| to be meaningful.
class DegenerateDirection : public Error {
 public:
  using Error::Error;
};

class IllConditioned : public Error {
 public:
  using Error::Error;
};

class NonFiniteField : public Error {
 public:
  using Error::Error;
};

/// Excitation window shorter than two samples or longer than the signal.
class WindowTooShort : public Error {
 public:
  using Error::Error;
};

/// (delta, mu) pair that violates 0 < mu < delta.
class InvalidPE : public Error {
 public:
  using Error::Error;
};

class NonPositiveError : public Error {
 public:
  using Error::Error;
};

/// Configuration or scenario that fails validation. `field()` names the
/// offending key using the config file's dotted notation.
class ValidationError : public Error {
 public:
  ValidationError(std::string field, const std::string& what)
      : Error(field + ": " + what), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

}  // namespace bearing_obs
