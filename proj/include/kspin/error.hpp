#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace kspin {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A model or configuration violates its documented invariants.
class ValidationError : public Error {
 public:
  explicit ValidationError(std::vector<std::string> violations);

  const std::vector<std::string>& violations() const noexcept { return violations_; }

 private:
  std::vector<std::string> violations_;
};

/// Malformed input document. Carries the offending location when known.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// A computation would exceed a configured size or work limit.
class LimitError : public Error {
 public:
  using Error::Error;
};

}  // namespace kspin
