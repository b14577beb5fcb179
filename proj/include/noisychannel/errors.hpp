#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace noisychannel {

// Base class for every error the library reports. The CLI maps all of these
// to exit code 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input record. Carries the 1-based line number of the record.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// Well-formed input that violates a data invariant (e.g. score outside [0,1]).
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Precondition violation on an operation's arguments.
class DomainError : public Error {
 public:
  using Error::Error;
};

// Requested value lies outside what the model can achieve.
class RangeError : public Error {
 public:
  using Error::Error;
};

// Invalid configuration file or configuration object.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace noisychannel
