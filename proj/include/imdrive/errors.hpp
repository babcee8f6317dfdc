#pragma once

#include <stdexcept>
#include <string>

namespace imdrive {

// Rejected configuration or violated operation precondition.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Numerical failure during a run (non-finite state, diverging step).
struct SimulationError : std::runtime_error {
  explicit SimulationError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace imdrive
