#pragma once

#include <stdexcept>
#include <string>

namespace cmmnl {

// Invalid inputs: malformed files, inconsistent dimensions, violated type
// invariants. CLI maps these to exit code 1.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Non-finite values or failed factorizations encountered during numerical
// work. CLI maps these to exit code 2.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace cmmnl
