#pragma once

#include <stdexcept>
#include <string>

namespace splitnet {

// Bad user input: malformed specs, out-of-range labels, shape mismatches.
// CLI maps this to exit code 1.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Broken internal invariant (a bug, not user error). CLI exit code 2.
class InternalError : public std::logic_error {
 public:
  explicit InternalError(const std::string& msg) : std::logic_error(msg) {}
};

// API misuse, e.g. backward() before forward().
class StateError : public std::logic_error {
 public:
  explicit StateError(const std::string& msg) : std::logic_error(msg) {}
};

}  // namespace splitnet
