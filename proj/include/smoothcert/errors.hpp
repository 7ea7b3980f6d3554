#pragma once

#include <stdexcept>

namespace smoothcert {

// File and parse errors; the CLI maps these to its I/O exit code.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace smoothcert
