#pragma once

#include <stdexcept>
#include <string>

namespace rmeta {

// Shape/layout violations (segment size, operand dims, ...).
struct ShapeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A NaN or Inf showed up where the contract requires finite values.
// `where` is the tape node id, optimizer step, or iteration that produced it
// (negative when unknown).
struct NonFiniteError : std::runtime_error {
  long long where;
  explicit NonFiniteError(const std::string& msg, long long where_ = -1)
      : std::runtime_error(msg), where(where_) {}
};

// Invalid configuration or argument combination.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace rmeta
