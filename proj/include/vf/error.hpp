#pragma once

#include <stdexcept>
#include <string>

namespace vf {

// Invalid arguments, malformed data, broken invariants. CLI exit code 1.
struct ValidationError : std::runtime_error {
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Filesystem / parse failures. CLI exit code 2.
struct IoError : std::runtime_error {
  explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace vf
