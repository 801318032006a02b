#pragma once

#include <stdexcept>
#include <string>

namespace bullbear {

// Raised when a computation leaves its validity region (value bound breach,
// positivity floor hit, structurally violated likelihood-ratio condition, ...).
// Distinct from std::invalid_argument, which is reserved for bad inputs and
// malformed configuration. The CLI maps the two to different exit codes.
class numerical_error : public std::runtime_error {
 public:
  explicit numerical_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace bullbear
