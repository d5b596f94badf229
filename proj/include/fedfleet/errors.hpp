#pragma once

#include <stdexcept>
#include <string>

namespace fedfleet {

/// Layout or dimension mismatch between tensors / parameter vectors.
class ShapeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input (bad magic number, unparseable document).
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Truncated or over-long payload.
class LengthError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Value outside the documented domain (label out of range, degenerate weights).
class DomainError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operation requires a non-empty dataset / update set.
class EmptyDataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Unknown node id, missing checkpoint, absent file.
class LookupError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid scenario configuration; the message names the offending field.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace fedfleet
