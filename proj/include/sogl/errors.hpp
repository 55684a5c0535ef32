#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace sogl {

/// Malformed input (unreadable file, bad JSON, wrong value types).
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An input that parsed but violates a structural invariant.
/// `field()` names the offending entry, e.g. "groups[1][0]".
class ValidationError : public std::runtime_error {
 public:
  ValidationError(std::string field, const std::string& message)
      : std::runtime_error(field + ": " + message), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// A solver iterate contained NaN or Inf.
class NonFiniteError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Brute-force enumeration requested on an instance above its size limit.
class TooLargeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace sogl
