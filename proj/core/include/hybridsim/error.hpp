#pragma once

#include <stdexcept>
#include <string>

namespace hybridsim {

// Raised for malformed input documents and cross-reference failures. The CLI
// maps it to exit code 2.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// Raised when a query cannot be answered (unknown id, unreachable destination).
class LookupError : public std::runtime_error {
 public:
  explicit LookupError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace hybridsim
