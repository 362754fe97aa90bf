#pragma once

#include <stdexcept>
#include <string>

namespace imploss {

struct ValidationError : std::runtime_error {
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

struct ParseError : std::runtime_error {
  explicit ParseError(const std::string& msg) : std::runtime_error(msg) {}
};

// Non-finite values encountered during optimization or inference.
struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& msg, long step = -1)
      : std::runtime_error(msg), step(step) {}
  long step;
};

}  // namespace imploss
