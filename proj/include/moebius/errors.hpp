#pragma once

#include <stdexcept>
#include <string>

namespace moebius {

// Base for every error raised by the library. The CLI maps subclasses onto
// process exit codes (see cli.hpp).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid configuration or malformed input file. `field` names the offender.
class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& message)
      : Error(field + ": " + message), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

// Non-finite gradients, objectives, or probabilities.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Network failure talking to a policy backend (after retries).
class TransportError : public Error {
 public:
  using Error::Error;
};

// The backend cannot perform the requested operation (e.g. weight updates on
// an inference-only endpoint).
class CapabilityError : public Error {
 public:
  using Error::Error;
};

// Contract violation on a domain operation (bad difficulty, empty vote, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

}  // namespace moebius
