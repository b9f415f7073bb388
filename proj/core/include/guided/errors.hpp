#pragma once

#include <stdexcept>
#include <string>

namespace guided {

// Base for every error thrown by the library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& message) : std::runtime_error(message) {}
};

// Transient transport failure; retried with backoff before being surfaced.
class TransportError : public Error {
 public:
  using Error::Error;
};

// Provider returned an error payload; not retryable.
class ProviderError : public Error {
 public:
  using Error::Error;
};

// A replayed/scripted provider has no answer for the request.
class ScriptExhaustedError : public Error {
 public:
  using Error::Error;
};

// Bad configuration: unknown model, missing credential, invalid flags.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed document or response that could not be parsed.
class ParseError : public Error {
 public:
  using Error::Error;
};

// Document declares a format version this build does not support.
class VersionError : public Error {
 public:
  using Error::Error;
};

// An operation was called outside its contract (e.g. extracting patterns
// from an incorrect trajectory).
class PreconditionError : public Error {
 public:
  using Error::Error;
};

}  // namespace guided
