#pragma once

#include <stdexcept>
#include <string>

namespace mazo {

// Contract violations carry their own type so callers (and the CLI exit-code
// mapping) can tell configuration mistakes from runtime failures.

struct DisconnectedGraph : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NotContractive : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DimensionMismatch : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct InfeasibleInstance : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NoConvergence : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NonFiniteValue : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NonFiniteIterate : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct StaleBeyondBuffer : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InvalidConstants : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// User-facing configuration / usage problems (CLI exit code 2).
struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

}  // namespace mazo
