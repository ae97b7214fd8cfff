#pragma once

#include <stdexcept>
#include <string>

namespace trapsim {

// Bad user input (config file, CLI flags). Maps to exit code 2.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Runtime simulation failure: exhausted grids/traces/horizons, coordinate
// overflow, dimension mismatch. Maps to exit code 3.
struct SimulationError : std::runtime_error {
  explicit SimulationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Filesystem failure while emitting results. Maps to exit code 4.
struct IoError : std::runtime_error {
  explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace trapsim
